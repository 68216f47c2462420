//! End-to-end acceptance run. Each criterion prints one PASS/FAIL line; the
//! whole suite then runs a second time and every report has to come out
//! byte for byte the same. Exits nonzero when anything fails.

use std::fmt::Write as _;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ccmap::ensemble;
use ccmap::output::MapDump;
use ccmap::params::{Params, Targeting};
use ccmap_core::generate::{DoorSegment, Family, ScenarioTemplate};
use ccmap_core::planner::{self, Calibration, PlannerConfig};
use ccmap_core::sim;
use ccmap_core::tmnn::{self, CouplingMatrix, TrainingCorpus};
use ccmap_core::{generate, Mode, Scenario, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// Everything the criterion produced, compared across the two passes.
    report: String,
}

struct Criterion {
    id: u8,
    name: &'static str,
    limit: Duration,
    run: fn(&Setup) -> Outcome,
}

struct Setup {
    params: Params,
    calibration: Calibration,
    planner: PlannerConfig,
}

impl Setup {
    fn new() -> Self {
        let params = Params::default();
        let calibration = ensemble::calibrate(&params.lattice, 80).expect("calibration");
        let planner = params.planner(calibration);
        Setup { params, calibration, planner }
    }
}

fn same_map(a: &planner::CompactCognitiveMap, b: &planner::CompactCognitiveMap) -> bool {
    a.arrival.iter().zip(&b.arrival).all(|(x, y)| x.to_bits() == y.to_bits())
        && a.effective_objects == b.effective_objects
}

fn dump(setup: &Setup, map: &planner::CompactCognitiveMap) -> String {
    MapDump::from_map(map, &setup.params.lattice).render(None)
}

fn static_scene(seed: u64) -> Scenario {
    // standing crowds of varying size, some in the corridor with walls
    let family = if seed % 3 == 2 { Family::ClutteredFlow } else { Family::StaticDemo };
    let base = ScenarioTemplate::new(family).with_seed(seed);
    let t = ScenarioTemplate {
        pedestrians: 2 + (seed % 6) as usize,
        speed_near: 0.0,
        speed_far: 0.0,
        speed_jitter: 0.0,
        ..base
    };
    generate::generate(&t).expect("static scene")
}

fn static_reduction(setup: &Setup) -> Outcome {
    let mut report = String::new();
    let mut bad = Vec::new();
    for seed in 0..5 {
        let s = static_scene(seed);
        let a = planner::build_map_avus(&s, &setup.planner).expect("avus map");
        let c = planner::build_map_cous(&s, &setup.planner).expect("cous map");
        if !same_map(&a, &c) || !c.cooperating.is_empty() {
            bad.push(seed);
        }
        report += &dump(setup, &a);
        report += &dump(setup, &c);
    }
    Outcome { pass: bad.is_empty(), detail: format!("5 static scenes, differing maps on seeds {bad:?}"), report }
}

fn no_local_minima(setup: &Setup) -> Outcome {
    let mut report = String::new();
    let (mut minima, mut stuck, mut cells) = (0, 0, 0);
    for seed in 0..50 {
        let s = static_scene(seed);
        let mode = Mode::ALL[seed as usize % 2];
        let map = planner::build_map(&s, mode, &setup.planner).expect("map");
        minima += map.local_minima().len();
        for k in (0..map.mapping.len()).filter(|&k| map.reachable[k]) {
            cells += 1;
            if *map.descend_cells(k).last().unwrap() != map.agent {
                stuck += 1;
            }
        }
        writeln!(report, "{seed} {mode} {} {}", map.mental_steps, map.omega_len()).unwrap();
    }
    Outcome {
        pass: minima == 0 && stuck == 0,
        detail: format!("50 scenes, {cells} reachable cells: {minima} local minima, {stuck} descents stuck"),
        report,
    }
}

fn tmnn_oracle(_: &Setup) -> Outcome {
    let h = 0.1;
    let params = Params::default().tmnn;
    let corpus = TrainingCorpus { step: h, ..TrainingCorpus::default() };
    let w = corpus.train(CouplingMatrix::identity(), &params).expect("training");
    let closed = CouplingMatrix([[1.0, h, h * h / 2.0], [0.0, 1.0, h], [0.0, 0.0, 1.0]]);
    let w_err = w.max_abs_diff(&closed);

    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let c: [f64; 6] =
            std::array::from_fn(|i| if i < 2 { rng.random_range(2.0..6.0) } else { rng.random_range(-1.0..1.0) });
        let at = |t: f64| Vec2::new(c[0] + c[2] * t + c[4] * t * t, c[1] + c[3] * t + c[5] * t * t);
        let (mx, my) = tmnn::estimate_momenta(at(-2.0 * h), at(-h), at(0.0), h);
        let (px, py) = (tmnn::predict(&w, mx, 20), tmnn::predict(&w, my, 20));
        for k in 0..20 {
            let truth = at((k + 1) as f64 * h);
            let rel = Vec2::new(px[k], py[k]).distance(truth) / truth.norm();
            worst = worst.max(rel);
        }
    }
    Outcome {
        pass: w_err <= 1e-3 && worst <= 1e-3,
        detail: format!(
            "{} trajectories, |W - W_c| = {w_err:.2e}, worst 20-step relative error {worst:.2e}",
            corpus.trajectories
        ),
        report: format!("{:?}\n{worst:e}\n", w.0),
    }
}

fn head_on_shrinkage(setup: &Setup) -> Outcome {
    let s = ensemble::ensemble_scenario(Family::HeadOn, &setup.params, 0).expect("scene");
    let a = planner::build_map_avus(&s, &setup.planner).expect("avus map");
    let c = planner::build_map_cous(&s, &setup.planner).expect("cous map");
    let (na, nc) = (a.omega_len(), c.omega_len());
    Outcome {
        pass: nc as f64 <= 0.75 * na as f64,
        detail: format!("|Ω| AvUs {na}, CoUs {nc} ({:.0}% smaller)", 100.0 * (1.0 - nc as f64 / na as f64)),
        report: dump(setup, &a) + &dump(setup, &c),
    }
}

fn stats_line(e: &ensemble::Ensemble, measure: &str) -> (f64, f64, f64) {
    let s = e.stats_rows().into_iter().find(|r| r.measure == measure).expect("measure");
    (s.mean_avus, s.mean_cous, s.p_value.unwrap_or(f64::NAN))
}

fn run_20(setup: &Setup, family: Family, targeting: Targeting) -> ensemble::Ensemble {
    let params = Params { targeting, ..setup.params.clone() };
    ensemble::run_ensemble(family, &params, setup.calibration, &Mode::ALL, 20, 0).expect("ensemble")
}

fn cluttered_center(setup: &Setup) -> Outcome {
    let e = run_20(setup, Family::ClutteredFlow, Targeting::Segment(DoorSegment::Center));
    let (la, lc, lp) = stats_line(&e, "L");
    let (sa, sc, sp) = stats_line(&e, "S");
    let (_, _, ep) = stats_line(&e, "E");
    Outcome {
        pass: lc < la && lp < 0.05 && sc > sa && sp < 0.05 && ep > 0.1,
        detail: format!("L {la:.4}/{lc:.4} p {lp:.4}; S {sa:.4}/{sc:.4} p {sp:.4}; E p {ep:.4}"),
        report: e.metrics_csv(None) + &e.stats_csv(None),
    }
}

fn cluttered_extremes(setup: &Setup) -> Outcome {
    let e = run_20(setup, Family::ClutteredFlow, Targeting::Extremes);
    let (la, lc, lp) = stats_line(&e, "L");
    Outcome {
        pass: lp > 0.05,
        detail: format!("L {la:.4}/{lc:.4} p {lp:.4}"),
        report: e.metrics_csv(None) + &e.stats_csv(None),
    }
}

fn dense_group(setup: &Setup) -> Outcome {
    let sim_cfg = setup.params.sim_config();
    let mut report = String::new();
    let mut failures = Vec::new();
    for seed in 0..5 {
        let s = ensemble::ensemble_scenario(Family::DenseGroup, &setup.params, seed).expect("scene");
        let a = planner::plan(&s, Mode::AvUs, &setup.planner).expect("avus plan");
        let c = sim::simulate(&s, Mode::CoUs, &setup.planner, &sim_cfg).expect("cous run");
        if a.path.is_some() {
            failures.push(format!("seed {seed}: AvUs found a path"));
        }
        if !c.completed || !c.collisions.is_empty() {
            failures.push(format!("seed {seed}: CoUs completed {} with {} contacts", c.completed, c.collisions.len()));
        }
        writeln!(report, "{seed} {} {} {}", a.path.is_some(), c.completed, c.collisions.len()).unwrap();
        for p in &c.agent {
            writeln!(report, "{:?} {:?}", p.x, p.y).unwrap();
        }
    }
    let detail = if failures.is_empty() {
        "5 seeds: AvUs no path, CoUs through without contact".into()
    } else {
        failures.join("; ")
    };
    Outcome { pass: failures.is_empty(), detail, report }
}

fn line_up(setup: &Setup) -> Outcome {
    let e = run_20(setup, Family::LineUp, setup.params.targeting);
    let (la, lc, lp) = stats_line(&e, "L");
    let (sa, sc, sp) = stats_line(&e, "S");
    let (ea, ec, ep) = stats_line(&e, "E");
    Outcome {
        pass: ec > ea && ep < 0.05 && lc < la && sc < sa,
        detail: format!("E {ea:.4}/{ec:.4} p {ep:.4}; L {la:.4}/{lc:.4} p {lp:.4}; S {sa:.4}/{sc:.4} p {sp:.4}"),
        report: e.metrics_csv(None) + &e.stats_csv(None),
    }
}

const CRITERIA: [Criterion; 8] = [
    Criterion { id: 1, name: "static reduction", limit: Duration::from_secs(10), run: static_reduction },
    Criterion { id: 2, name: "no local minima", limit: Duration::from_secs(300), run: no_local_minima },
    Criterion { id: 3, name: "TMNN oracle", limit: Duration::from_secs(30), run: tmnn_oracle },
    Criterion { id: 4, name: "head-on shrinkage", limit: Duration::from_secs(60), run: head_on_shrinkage },
    Criterion { id: 5, name: "cluttered flow, center", limit: Duration::from_secs(900), run: cluttered_center },
    Criterion { id: 6, name: "cluttered flow, extremes", limit: Duration::from_secs(900), run: cluttered_extremes },
    Criterion { id: 7, name: "dense group", limit: Duration::from_secs(120), run: dense_group },
    Criterion { id: 8, name: "line-up", limit: Duration::from_secs(900), run: line_up },
];

fn main() -> ExitCode {
    let setup = Setup::new();
    let mut all_pass = true;
    let mut first = Vec::new();
    for c in &CRITERIA {
        let start = Instant::now();
        let out = (c.run)(&setup);
        let took = start.elapsed();
        let pass = out.pass && took <= c.limit;
        all_pass &= pass;
        println!(
            "{} criterion {} ({}): {} [{:.1} s of {} s]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            out.detail,
            took.as_secs_f64(),
            c.limit.as_secs()
        );
        first.push(out.report);
    }

    let mut differing = Vec::new();
    for (c, before) in CRITERIA.iter().zip(&first) {
        if (c.run)(&setup).report != *before {
            differing.push(c.id);
        }
    }
    let pass = differing.is_empty();
    all_pass &= pass;
    println!(
        "{} criterion 9 (determinism): reports of criteria 1-8 rerun, differing: {differing:?}",
        if pass { "PASS" } else { "FAIL" }
    );

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
