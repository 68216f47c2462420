use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use ccmap_core::generate::Family;
use ccmap_core::metrics;
use ccmap_core::planner::{self, Calibration};
use ccmap_core::{Mode, Scenario};

use crate::ensemble;
use crate::error::{ConfigError, RunError};
use crate::output::{self, CalibrationRow, MapDump, MetricsRow};
use crate::params::Params;
use crate::scenario_file;

#[derive(Debug, Parser)]
#[command(name = "ccmap", version, about = "Compact cognitive map navigation among pedestrians")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the compact map and trace a path: map dump and path CSV per mode.
    Plan(Common),
    /// Plan and execute: trajectories, contact events and metrics per mode.
    Simulate(Common),
    /// Seeded template runs: per-run metrics and a stats report.
    Ensemble(Common),
    /// Measure the front speed on empty lattices.
    Calibrate(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Avus,
    Cous,
    Both,
}

impl ModeArg {
    pub fn modes(self) -> &'static [Mode] {
        match self {
            ModeArg::Avus => &[Mode::AvUs],
            ModeArg::Cous => &[Mode::CoUs],
            ModeArg::Both => &Mode::ALL,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file.
    #[arg(long, conflicts_with = "template")]
    pub scenario: Option<PathBuf>,
    /// Scene family: static_demo, dynamic_demo, head_on, cluttered_flow, dense_group, line_up.
    #[arg(long)]
    pub template: Option<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,
    /// Ensemble size.
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    /// Template seed; ensembles use seed, seed+1, ...
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Parameter override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Leave out the generated_at line so reruns are byte-identical.
    #[arg(long)]
    pub no_timestamp: bool,
}

impl Common {
    fn params(&self) -> Result<Params, ConfigError> {
        let mut p = Params::default();
        for pair in &self.set {
            p.set_pair(pair)?;
        }
        p.validate()?;
        Ok(p)
    }

    fn family(&self) -> Result<Option<Family>, ConfigError> {
        self.template
            .as_deref()
            .map(|t| t.parse::<Family>().map_err(|e| ConfigError::Invalid(e.to_string())))
            .transpose()
    }
}

/// Files written by a command and a short human-readable account.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

struct Out<'a> {
    dir: &'a Path,
    stamp: Option<String>,
    report: Report,
}

impl Out<'_> {
    fn write(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        self.report.files.push(path);
        Ok(())
    }

    fn stamped(&self, body: &str) -> String {
        match &self.stamp {
            Some(s) => format!("{s}\n{body}"),
            None => body.to_string(),
        }
    }

    fn stamp(&self) -> Option<&str> {
        self.stamp.as_deref()
    }
}

pub fn run(cli: &Cli) -> Result<Report, RunError> {
    let (Command::Plan(c) | Command::Simulate(c) | Command::Ensemble(c) | Command::Calibrate(c)) = &cli.command;
    let params = c.params()?;
    fs::create_dir_all(&c.out).map_err(|e| ConfigError::Io(format!("{}: {e}", c.out.display())))?;
    let mut out = Out { dir: &c.out, stamp: output::stamp_line(!c.no_timestamp), report: Report::default() };

    if let Command::Calibrate(_) = cli.command {
        let mut rows = Vec::new();
        for &n in &params.calibration_sizes {
            let cal = ensemble::calibrate(&params.lattice, n)?;
            out.report
                .lines
                .push(format!("n={n}: front speed {:.5} cells per unit, offset {:.3}", cal.front_speed, cal.offset));
            rows.push(CalibrationRow::new(n, cal));
        }
        out.write("params.txt", &out.stamped(&params.sidecar(None)))?;
        out.write("calibration.csv", &output::csv_string(&rows, out.stamp()))?;
        return Ok(out.report);
    }

    let family = c.family()?;
    let calibration = ensemble::calibrate(&params.lattice, 80)?;

    if let Command::Ensemble(_) = cli.command {
        let family = family.ok_or_else(|| ConfigError::Invalid("ensemble needs --template".into()))?;
        let template = params.template(family)?;
        let e = ensemble::run_ensemble(family, &params, calibration, c.mode.modes(), c.runs, c.seed)?;
        out.write("params.txt", &out.stamped(&params.sidecar(Some(&template))))?;
        out.write("metrics.csv", &e.metrics_csv(out.stamp()))?;
        out.write("stats.csv", &e.stats_csv(out.stamp()))?;
        for m in c.mode.modes() {
            out.report.lines.push(format!("{m}: {} of {} runs incomplete", e.failures(*m), c.runs));
        }
        for s in e.stats_rows() {
            let p = s.p_value.map_or("n/a".to_string(), |p| format!("{p:.4}"));
            out.report.lines.push(format!(
                "{}: avus {:.4} ± {:.4}, cous {:.4} ± {:.4}, p = {p}",
                s.measure, s.mean_avus, s.std_avus, s.mean_cous, s.std_cous
            ));
        }
        return Ok(out.report);
    }

    let (scenario, template) = match (&c.scenario, family) {
        (Some(path), _) => (scenario_file::load_scenario(path)?, None),
        (None, Some(f)) => {
            let t = params.template(f)?.with_seed(c.seed).with_segment(params.targeting.segment(c.seed));
            (ensemble::ensemble_scenario(f, &params, c.seed)?, Some(t))
        }
        (None, None) => return Err(ConfigError::Invalid("need --scenario or --template".into()).into()),
    };
    out.write("params.txt", &out.stamped(&params.sidecar(template.as_ref())))?;
    out.write("scenario.txt", &out.stamped(&scenario_file::emit_scenario(&scenario)))?;
    let planner_cfg = params.planner(calibration);

    match cli.command {
        Command::Plan(_) => {
            for &mode in c.mode.modes() {
                let p = planner::plan(&scenario, mode, &planner_cfg)?;
                let dump = MapDump::from_map(&p.map, &params.lattice);
                out.write(&format!("map_{mode}.txt"), &dump.render(out.stamp()))?;
                let rows = match &p.path {
                    Some(path) => output::path_rows(&planner::to_world_trajectory(path, &scenario)),
                    None => Vec::new(),
                };
                out.write(&format!("path_{mode}.csv"), &output::csv_string(&rows, out.stamp()))?;
                let how = match &p.path {
                    Some(path) => format!("path {:.3} m", path.length()),
                    None => "no path".to_string(),
                };
                out.report.lines.push(format!("{mode}: {} effective-obstacle cells, {how}", dump.obstacle_count()));
            }
        }
        Command::Simulate(_) => simulate(&scenario, c, &params, calibration, &mut out)?,
        Command::Ensemble(_) | Command::Calibrate(_) => unreachable!("handled above"),
    }
    Ok(out.report)
}

fn simulate(scenario: &Scenario, c: &Common, params: &Params, cal: Calibration, out: &mut Out) -> Result<(), RunError> {
    let results = ensemble::run_modes(scenario, c.mode.modes(), &params.planner(cal), &params.sim_config())?;
    let mut rows = Vec::new();
    for r in &results {
        let mode = r.mode;
        out.write(&format!("trajectory_{mode}.csv"), &output::csv_string(&output::trajectory_rows(r), out.stamp()))?;
        out.write(&format!("events_{mode}.csv"), &output::csv_string(&output::event_rows(r), out.stamp()))?;
        let rec = metrics::evaluate(
            r,
            scenario.agent_start,
            scenario.target,
            scenario.nav_tolerance,
            params.critical_distance,
        );
        let row = MetricsRow::new(0, scenario.seed, params.targeting.segment(scenario.seed).as_str(), &rec, r);
        let status = if row.completed { "completed".to_string() } else { row.failure.clone() };
        out.report.lines.push(format!(
            "{mode}: {status}, L {:.4}, S {:.4}, E {:.4}, {} contact events",
            row.length, row.safety, row.effort, row.collisions
        ));
        rows.push(row);
    }
    out.write("metrics.csv", &output::csv_string(&rows, out.stamp()))
}

/// Parses arguments, runs, prints the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(report) => {
            for l in &report.lines {
                println!("{l}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
