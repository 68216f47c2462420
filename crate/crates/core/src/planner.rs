//! Map construction under both strategies and path extraction.
//!
//! Pedestrian footprints are advanced along trajectories predicted by the
//! [`TrajectoryPredictor`] and fed to the lattice as the occupancy stream.
//! Mental time is tied to wall-clock time through the measured front speed:
//! the front covers `v_w` cells per mental unit while the agent covers
//! `agent_speed` meters per second, so `τ` maps to
//! `(τ - τ0) · v_w · cell_size / agent_speed` seconds, where `τ0` is the
//! ignition delay of the front.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{GridMapping, Vec2};
use crate::lattice::{run_wave, EffectiveObjectSet, EmptyStream, LatticeParams, LatticeState, OccupancyStream, UNSET};
use crate::scenario::{Mode, Pedestrian, Scenario};
use crate::social::{self, BranchPair, HumanModel};
use crate::tmnn::{TmnnParams, TrajectoryPredictor};

/// Front speed and ignition delay measured on an empty lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    /// Cells per mental time unit.
    pub front_speed: f64,
    /// Mental time at which the fitted front leaves the agent cell.
    pub offset: f64,
}

impl Calibration {
    /// Launches a wave from the center of an empty `n × n` lattice and fits
    /// `c = offset + dist / front_speed` over cells between 8 cells and 45%
    /// of the side from the source.
    pub fn measure(params: &LatticeParams, n: usize) -> Result<Calibration> {
        if n < 24 {
            return Err(Error::invalid("calibration lattice must be at least 24 cells wide"));
        }
        let m = GridMapping::new(n as f64, n)?;
        let src = (n / 2) * n + n / 2;
        let out = run_wave(&m, src, &mut EmptyStream, params)?;
        let c0 = m.center(src);
        let (lo, hi) = (8.0, 0.45 * n as f64);
        let samples = (0..m.len()).filter_map(|k| {
            let d = m.center(k).distance(c0);
            (d >= lo && d <= hi && out.arrival[k] != UNSET).then(|| (d, out.arrival[k]))
        });
        let (slope, intercept) = least_squares(samples).ok_or(Error::NoPath)?;
        if !(slope > 0.0) {
            return Err(Error::invalid("front does not propagate"));
        }
        Ok(Calibration { front_speed: 1.0 / slope, offset: intercept })
    }

    /// Seconds of wall-clock time per mental time unit.
    pub fn seconds_per_unit(&self, cell_size: f64, agent_speed: f64) -> f64 {
        self.front_speed * cell_size / agent_speed
    }

    /// Wall-clock time at which the agent would reach a cell the front
    /// reached at mental time `tau`.
    pub fn seconds_at(&self, tau: f64, cell_size: f64, agent_speed: f64) -> f64 {
        ((tau - self.offset) * self.seconds_per_unit(cell_size, agent_speed)).max(0.0)
    }
}

/// Ordinary least squares `y = a·x + b`; returns `(a, b)`.
fn least_squares(points: impl Iterator<Item = (f64, f64)>) -> Option<(f64, f64)> {
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in points {
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let den = n * sxx - sx * sx;
    if n < 2.0 || den == 0.0 {
        return None;
    }
    let a = (n * sxy - sx * sy) / den;
    Some((a, (sy - a * sx) / n))
}

/// Half a cell diagonal on the default lattice.
pub const DEFAULT_FOOTPRINT_MARGIN: f64 = 0.075;

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub lattice: LatticeParams,
    pub tmnn: TmnnParams,
    pub human: HumanModel,
    pub calibration: Calibration,
    /// Descent step in cells.
    pub descent_step: f64,
    /// Radius of the target disc in meters.
    pub target_radius: f64,
    /// Extra radius added to every pedestrian footprint, meters. Covers the
    /// gap between a cell-center footprint and the continuous zone.
    pub footprint_margin: f64,
}

impl PlannerConfig {
    /// Default parameters with the front speed measured on an 80-cell lattice.
    pub fn calibrated(lattice: LatticeParams) -> Result<Self> {
        let calibration = Calibration::measure(&lattice, 80)?;
        Ok(PlannerConfig {
            lattice,
            tmnn: TmnnParams::default(),
            human: HumanModel::default(),
            calibration,
            descent_step: 0.5,
            target_radius: 0.1,
            footprint_margin: DEFAULT_FOOTPRINT_MARGIN,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CompactCognitiveMap {
    pub mapping: GridMapping,
    pub mode: Mode,
    /// Arrival field; [`UNSET`] where the front never arrived.
    pub arrival: Vec<f64>,
    pub effective_objects: EffectiveObjectSet,
    pub reachable: Vec<bool>,
    pub agent: usize,
    pub calibration: Calibration,
    pub mental_steps: usize,
    /// Pedestrians (scenario order) the map assumes will cooperate.
    pub cooperating: Vec<usize>,
}

impl CompactCognitiveMap {
    pub fn omega_len(&self) -> usize {
        self.effective_objects.len()
    }

    /// Centers of the effective-object cells.
    pub fn omega_points(&self) -> Vec<Vec2> {
        self.effective_objects.members().iter().map(|&k| self.mapping.center(k)).collect()
    }

    /// Cells usable by the descent: reachable cells and the agent cell.
    pub fn passable(&self, k: usize) -> bool {
        self.reachable[k] || k == self.agent
    }

    /// Reachable non-agent cells without an 8-neighbor of strictly smaller `c`.
    pub fn local_minima(&self) -> Vec<usize> {
        let n = self.mapping.n() as i64;
        (0..self.mapping.len())
            .filter(|&k| self.reachable[k] && k != self.agent)
            .filter(|&k| {
                let (a, b) = ((k as i64) % n, (k as i64) / n);
                !neighbors8(a, b, n).any(|q| self.passable(q) && self.arrival[q] < self.arrival[k])
            })
            .collect()
    }
}

impl CompactCognitiveMap {
    /// Steepest 8-neighbor descent on `c` from cell `from`. Ends at the
    /// agent cell, or at the first cell without a strictly lower neighbor.
    pub fn descend_cells(&self, from: usize) -> Vec<usize> {
        let n = self.mapping.n() as i64;
        let mut cells = alloc::vec![from];
        let mut k = from;
        while k != self.agent {
            let (a, b) = ((k as i64) % n, (k as i64) / n);
            let next = neighbors8(a, b, n)
                .filter(|&q| self.passable(q) && self.arrival[q] < self.arrival[k])
                .min_by(|&p, &q| self.arrival[p].total_cmp(&self.arrival[q]));
            match next {
                Some(q) => {
                    cells.push(q);
                    k = q;
                }
                None => break,
            }
        }
        cells
    }
}

fn neighbors8(a: i64, b: i64, n: i64) -> impl Iterator<Item = usize> {
    const OFFSETS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, 1), (1, -1), (-1, -1)];
    OFFSETS.into_iter().filter_map(move |(da, db)| {
        let (x, y) = (a + da, b + db);
        (x >= 0 && y >= 0 && x < n && y < n).then(|| (y * n + x) as usize)
    })
}

/// Per-pedestrian prediction sampled every `time_base` seconds.
struct Track {
    positions: Vec<Vec2>,
    velocities: Vec<Vec2>,
    radius: f64,
    personal_radius: f64,
    reaction: f64,
    state: Cooperation,
}

#[derive(Clone, Copy)]
enum Cooperation {
    Pending,
    Never,
    Branching { pair: BranchPair, onset: f64 },
}

impl Track {
    fn sample(&self, t: f64, step: f64) -> (Vec2, Vec2) {
        let s = t / step;
        let i = libm::floor(s) as usize;
        let last = self.positions.len() - 1;
        if i >= last {
            return (self.positions[last], self.velocities[last]);
        }
        let f = s - i as f64;
        (self.positions[i].lerp(self.positions[i + 1], f), self.velocities[i].lerp(self.velocities[i + 1], f))
    }
}

/// Occupancy of one scene for one strategy.
struct SceneStream<'a> {
    mapping: GridMapping,
    mode: Mode,
    static_cells: Vec<usize>,
    tracks: Vec<Track>,
    time_base: f64,
    agent_radius: f64,
    seconds: &'a dyn Fn(usize) -> f64,
    band: (f64, f64),
    human: HumanModel,
}

impl OccupancyStream for SceneStream<'_> {
    fn occupied(&mut self, step: usize, state: &LatticeState, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.static_cells);
        let t = (self.seconds)(step);
        let m = self.mapping;
        for track in &mut self.tracks {
            let (pos, vel) = track.sample(t, self.time_base);
            if self.mode == Mode::CoUs && matches!(track.state, Cooperation::Pending) {
                track.state =
                    cooperation_onset(track, pos, vel, t, step, state, &m, (self.agent_radius, self.band), &self.human);
            }
            match track.state {
                Cooperation::Branching { pair, onset } => {
                    social::for_each_virtual_cell(&pair, self.agent_radius, &m, t - onset, |k| out.push(k));
                }
                _ => m.for_each_disc_cell(pos, track.radius, |k| out.push(k)),
            }
        }
    }
}

/// Starts cooperation at the first step a front cell lies in the reaction
/// zone inside the cone; a standing human never cooperates.
#[allow(clippy::too_many_arguments)]
fn cooperation_onset(
    track: &Track,
    pos: Vec2,
    vel: Vec2,
    t: f64,
    step: usize,
    state: &LatticeState,
    m: &GridMapping,
    (agent_radius, band): (f64, (f64, f64)),
    human: &HumanModel,
) -> Cooperation {
    if !(vel.norm_sq() > 0.0) {
        return Cooperation::Never;
    }
    let r = state.potential();
    let gate = state.gate();
    let mut eligible = false;
    m.for_each_disc_cell(pos, track.reaction + agent_radius, |k| {
        if !eligible && gate[k] && r[k] >= band.0 && r[k] <= band.1 {
            eligible = social::crossing_angle(pos, vel, m.center(k)).is_ok_and(|a| a.abs() < human.crossing_angle_deg);
        }
    });
    if !eligible {
        return Cooperation::Pending;
    }
    match BranchPair::new(step, pos, vel, track.personal_radius, human) {
        Ok(pair) => Cooperation::Branching { pair, onset: t },
        Err(_) => Cooperation::Never,
    }
}

/// Predicted positions and velocities for a pedestrian walking at constant
/// velocity up to now, `steps` samples ahead.
fn predict_track(p: &Pedestrian, predictor: &TrajectoryPredictor, steps: usize) -> (Vec<Vec2>, Vec<Vec2>) {
    let h = predictor.step;
    let observed = [p.position - p.velocity * (2.0 * h), p.position - p.velocity * h, p.position];
    let positions = predictor.extrapolate(observed, steps);
    let mut velocities = Vec::with_capacity(positions.len());
    velocities.push(p.velocity);
    for w in positions.windows(2) {
        velocities.push((w[1] - w[0]) * (1.0 / h));
    }
    (positions, velocities)
}

/// Builds the compact cognitive map of `scenario` under `mode`.
pub fn build_map(scenario: &Scenario, mode: Mode, cfg: &PlannerConfig) -> Result<CompactCognitiveMap> {
    build_map_excluding(scenario, mode, cfg, &[])
}

/// [`build_map`] with the pedestrians at `never` (scenario order) treated as
/// non-cooperating.
fn build_map_excluding(
    scenario: &Scenario,
    mode: Mode,
    cfg: &PlannerConfig,
    never: &[usize],
) -> Result<CompactCognitiveMap> {
    scenario.validate()?;
    let m = scenario.mapping;
    let agent = m.flat(m.world_to_grid(scenario.agent_start)?);
    let h = cfg.lattice.mental_step();
    let cs = m.cell_size();
    let cal = cfg.calibration;
    let seconds = move |step: usize| cal.seconds_at(step as f64 * h, cs, scenario.agent_speed);

    let mut static_cells: Vec<usize> =
        scenario.obstacles.iter().flat_map(|o| o.cells(&m, scenario.agent_radius)).collect();
    static_cells.sort_unstable();
    static_cells.dedup();

    let tracks = if scenario.pedestrians.is_empty() {
        Vec::new()
    } else {
        let predictor = TrajectoryPredictor::trained(scenario.time_base, &cfg.tmnn)?;
        let horizon = seconds(cfg.lattice.max_mental_steps);
        let steps = libm::ceil(horizon / scenario.time_base) as usize + 1;
        scenario
            .pedestrians
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (positions, velocities) = predict_track(p, &predictor, steps);
                Track {
                    positions,
                    velocities,
                    radius: p.personal_radius + scenario.agent_radius + cfg.footprint_margin,
                    personal_radius: p.personal_radius + cfg.footprint_margin,
                    reaction: p.reaction_distance,
                    state: if never.contains(&i) { Cooperation::Never } else { Cooperation::Pending },
                }
            })
            .collect()
    };

    let mut stream = SceneStream {
        mapping: m,
        mode,
        static_cells,
        tracks,
        time_base: scenario.time_base,
        agent_radius: scenario.agent_radius,
        seconds: &seconds,
        band: cfg.lattice.front_band,
        human: cfg.human,
    };
    let out = run_wave(&m, agent, &mut stream, &cfg.lattice)?;
    let cooperating = (stream.tracks.iter().enumerate())
        .filter(|(_, t)| matches!(t.state, Cooperation::Branching { .. }))
        .map(|(i, _)| i)
        .collect();
    Ok(CompactCognitiveMap {
        mapping: m,
        mode,
        arrival: out.arrival,
        effective_objects: out.effective_objects,
        reachable: out.reachable,
        agent,
        calibration: cal,
        mental_steps: out.mental_steps,
        cooperating,
    })
}

pub fn build_map_avus(scenario: &Scenario, cfg: &PlannerConfig) -> Result<CompactCognitiveMap> {
    build_map(scenario, Mode::AvUs, cfg)
}

pub fn build_map_cous(scenario: &Scenario, cfg: &PlannerConfig) -> Result<CompactCognitiveMap> {
    build_map(scenario, Mode::CoUs, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// World coordinates from the agent toward the target.
    pub vertices: Vec<Vec2>,
    /// Interpolated arrival time at each vertex.
    pub mental_times: Vec<f64>,
    /// Calibration of the map the path was traced on.
    pub calibration: Calibration,
}

impl Path {
    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].distance(w[1])).sum()
    }
}

/// Bilinear interpolation of `c` and its gradient at lattice point `(u, v)`;
/// `None` when a corner is not passable or the point is off the lattice.
fn bilinear(map: &CompactCognitiveMap, u: f64, v: f64) -> Option<(f64, Vec2)> {
    let n = map.mapping.n();
    let last = (n - 1) as f64;
    if !(u >= 0.0 && v >= 0.0 && u <= last && v <= last) {
        return None;
    }
    let a = (libm::floor(u) as usize).min(n - 2);
    let b = (libm::floor(v) as usize).min(n - 2);
    let (fx, fy) = (u - a as f64, v - b as f64);
    let k00 = b * n + a;
    let ks = [k00, k00 + 1, k00 + n, k00 + n + 1];
    if !ks.iter().all(|&k| map.passable(k)) {
        return None;
    }
    let [c00, c10, c01, c11] = ks.map(|k| map.arrival[k]);
    let phi = c00 * (1.0 - fx) * (1.0 - fy) + c10 * fx * (1.0 - fy) + c01 * (1.0 - fx) * fy + c11 * fx * fy;
    let gx = (c10 - c00) * (1.0 - fy) + (c11 - c01) * fy;
    let gy = (c01 - c00) * (1.0 - fx) + (c11 - c10) * fx;
    Some((phi, Vec2::new(gx, gy)))
}

/// Descends `c` from the best cell near `target` to the agent cell.
pub fn trace(map: &CompactCognitiveMap, target: Vec2, step: f64) -> Result<Path> {
    trace_with_radius(map, target, step, 0.1)
}

/// [`trace`] with an explicit target-disc radius in meters. The disc always
/// includes the cell that contains `target`.
pub fn trace_with_radius(map: &CompactCognitiveMap, target: Vec2, step: f64, radius: f64) -> Result<Path> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::invalid("descent step must lie in (0, 1] cells"));
    }
    let m = &map.mapping;
    let own = m.flat(m.world_to_grid(target)?);
    let mut start = None::<usize>;
    let mut consider = |k: usize| {
        if map.passable(k) && start.is_none_or(|s| map.arrival[k] < map.arrival[s]) {
            start = Some(k);
        }
    };
    consider(own);
    m.for_each_disc_cell(target, radius, &mut consider);
    let start = start.ok_or(Error::NoPath)?;

    let n = m.n();
    let agent = map.agent;
    let agent_uv = ((agent % n) as f64, (agent / n) as f64);
    let node = |k: usize| ((k % n) as f64, (k / n) as f64);
    let mut p = node(start);
    let mut phi = map.arrival[start];
    let mut pts = vec![p];
    let mut times = vec![phi];
    let cap = libm::ceil(10.0 * n as f64 / step) as usize;

    for _ in 0..cap {
        let (du, dv) = (p.0 - agent_uv.0, p.1 - agent_uv.1);
        if du * du + dv * dv <= 1.0 + 1e-9 {
            return Ok(finish(map, pts, times, target));
        }
        if let Some((_, g)) = bilinear(map, p.0, p.1) {
            if let Some(d) = g.normalized() {
                let q = (p.0 - d.x * step, p.1 - d.y * step);
                if let Some((phi_q, _)) = bilinear(map, q.0, q.1) {
                    if phi_q < phi {
                        p = q;
                        phi = phi_q;
                        pts.push(p);
                        times.push(phi);
                        continue;
                    }
                }
            }
        }
        // discrete fallback: best passable corner of the current quad, then
        // the best 8-neighbor of that node
        let (a0, b0) = (libm::floor(p.0) as i64, libm::floor(p.1) as i64);
        let mut best = None::<usize>;
        for (da, db) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            let (a, b) = (a0 + da, b0 + db);
            if a < 0 || b < 0 || a >= n as i64 || b >= n as i64 {
                continue;
            }
            let (cu, cv) = (a as f64, b as f64);
            // only corners of the quad that actually contains p
            if (cu - p.0).abs() >= 1.0 || (cv - p.1).abs() >= 1.0 {
                continue;
            }
            let k = b as usize * n + a as usize;
            if map.passable(k) && best.is_none_or(|s| map.arrival[k] < map.arrival[s]) {
                best = Some(k);
            }
        }
        let Some(corner) = best else {
            return Err(Error::NoPath);
        };
        if map.arrival[corner] < phi {
            p = node(corner);
            phi = map.arrival[corner];
            pts.push(p);
            times.push(phi);
            continue;
        }
        let (ca, cb) = (corner % n, corner / n);
        let mut next = None::<usize>;
        for q in neighbors8(ca as i64, cb as i64, n as i64) {
            if map.passable(q) && next.is_none_or(|s| map.arrival[q] < map.arrival[s]) {
                next = Some(q);
            }
        }
        match next {
            Some(q) if map.arrival[q] < phi => {
                p = node(q);
                phi = map.arrival[q];
                pts.push(p);
                times.push(phi);
            }
            _ => return Err(Error::NoPath),
        }
    }
    Err(Error::NoPath)
}

fn finish(map: &CompactCognitiveMap, pts: Vec<(f64, f64)>, times: Vec<f64>, target: Vec2) -> Path {
    let m = &map.mapping;
    let mut vertices: Vec<Vec2> = pts.iter().rev().map(|&(u, v)| m.from_lattice(u, v)).collect();
    let mut mental_times: Vec<f64> = times.into_iter().rev().collect();
    let agent = m.center(map.agent);
    if vertices[0] != agent {
        vertices.insert(0, agent);
        mental_times.insert(0, 0.0);
    }
    let last = *vertices.last().unwrap();
    if last != target {
        vertices.push(target);
        mental_times.push(*mental_times.last().unwrap());
    }
    Path { vertices, mental_times, calibration: map.calibration }
}

/// Wall-clock sampled agent motion along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<Vec2>,
}

impl TimedTrajectory {
    pub fn duration(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Position at time `t`, clamped to the ends.
    pub fn position_at(&self, t: f64) -> Vec2 {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return self.points[0];
        }
        if i >= self.times.len() {
            return *self.points.last().unwrap();
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let f = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        self.points[i - 1].lerp(self.points[i], f)
    }
}

/// Times each vertex by arc length at the scenario's agent speed, starting
/// at the true start position, but never before the calibrated arrival of the
/// front: where the map only opened up late, the agent holds back.
pub fn to_world_trajectory(path: &Path, scenario: &Scenario) -> TimedTrajectory {
    let mut points = path.vertices.clone();
    if let Some(first) = points.first_mut() {
        *first = scenario.agent_start;
    }
    let cs = scenario.mapping.cell_size();
    let mut times: Vec<f64> = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let t = match i {
            0 => 0.0,
            _ => {
                let walk = times[i - 1] + p.distance(points[i - 1]) / scenario.agent_speed;
                walk.max(path.calibration.seconds_at(path.mental_times[i], cs, scenario.agent_speed))
            }
        };
        times.push(t);
    }
    TimedTrajectory { times, points }
}

/// How far inside the reaction zone an approach gate sits, in meters.
const GATE_DEPTH: f64 = 0.1;
/// Sampling period for locating zone entries, in seconds.
const ENTRY_SAMPLE: f64 = 0.005;

/// A compact map and the path traced on it.
#[derive(Debug, Clone)]
pub struct Plan {
    pub map: CompactCognitiveMap,
    /// `None` when the target is not reachable.
    pub path: Option<Path>,
}

/// Builds the map, traces the path and, under cooperation, makes the two
/// agree. A path relies on a pedestrian when it cuts into their footprint as
/// predicted without cooperation; they only react once the agent stands in
/// their reaction zone inside the cone, so that has to come first. A relied-on
/// pedestrian the path fails to trigger is first approached through a gate
/// on their visual axis; when that does not work out they are planned around as
/// a non-cooperating one and the map is rebuilt.
pub fn plan(scenario: &Scenario, mode: Mode, cfg: &PlannerConfig) -> Result<Plan> {
    let mut never = Vec::new();
    loop {
        let map = build_map_excluding(scenario, mode, cfg, &never)?;
        let path = match trace_with_radius(&map, scenario.target, cfg.descent_step, cfg.target_radius) {
            Ok(p) => p,
            Err(Error::NoPath) => return Ok(Plan { map, path: None }),
            Err(e) => return Err(e),
        };
        match align_approaches(&map, path, scenario, cfg) {
            Ok(path) => return Ok(Plan { map, path: Some(path) }),
            Err(i) => never.push(i),
        }
    }
}

/// Reroutes the path until it triggers every pedestrian it relies on, or
/// returns the first one it cannot.
///
/// The traced path often bends toward its passing side early and misses the
/// narrow cone. Its prefix is then replaced by a straight leg to a gate on
/// the visual axis just inside the zone and a straight join back onto the
/// path; the detour is kept only if it creates no new conflict.
fn align_approaches(
    map: &CompactCognitiveMap,
    mut path: Path,
    scenario: &Scenario,
    cfg: &PlannerConfig,
) -> core::result::Result<Path, usize> {
    let mut locked = 0;
    loop {
        let traj = to_world_trajectory(&path, scenario);
        let before = conflicts(&traj, scenario, &cfg.human);
        let Some(&(ti, i)) = before.iter().find(|(_, i)| map.cooperating.contains(i)) else {
            return Ok(path);
        };
        let p = &scenario.pedestrians[i];
        let (rerouted, gate) = reroute(map, &path, &traj, p, scenario, ti, locked).ok_or(i)?;
        let after = conflicts(&to_world_trajectory(&rerouted, scenario), scenario, &cfg.human);
        if after.iter().any(|&(_, j)| j == i || !before.iter().any(|&(_, k)| k == j)) {
            return Err(i);
        }
        path = rerouted;
        locked = gate;
    }
}

/// Pedestrians the agent comes closer to than contact distance, as predicted
/// without cooperation, without having triggered them first; with the time of
/// the intrusion, earliest first.
fn conflicts(traj: &TimedTrajectory, scenario: &Scenario, human: &HumanModel) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = (scenario.pedestrians.iter().enumerate())
        .filter_map(|(i, p)| {
            let ti = intrusion(traj, p, p.personal_radius + scenario.agent_radius)?;
            let triggered = trigger(traj, p, scenario.agent_radius, human).is_some_and(|tt| tt < ti);
            (!triggered).then_some((ti, i))
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn samples(traj: &TimedTrajectory) -> impl Iterator<Item = f64> {
    let steps = libm::ceil(traj.duration() / ENTRY_SAMPLE) as usize;
    (0..=steps).map(|k| k as f64 * ENTRY_SAMPLE)
}

/// First time the agent comes closer than `radius` to where the pedestrian
/// would be without cooperation.
fn intrusion(traj: &TimedTrajectory, p: &Pedestrian, radius: f64) -> Option<f64> {
    samples(traj).find(|&t| traj.position_at(t).distance(pedestrian_at(p, t)) < radius)
}

/// First time the agent stands in the pedestrian's reaction zone inside the
/// cooperation cone.
fn trigger(traj: &TimedTrajectory, p: &Pedestrian, agent_radius: f64, human: &HumanModel) -> Option<f64> {
    let reach = p.reaction_distance + agent_radius;
    samples(traj).find(|&t| {
        let (a, q) = (traj.position_at(t), pedestrian_at(p, t));
        a.distance(q) <= reach
            && social::crossing_angle(q, p.velocity, a).is_ok_and(|x| x.abs() < human.crossing_angle_deg)
    })
}

fn pedestrian_at(p: &Pedestrian, t: f64) -> Vec2 {
    p.position + p.velocity * t
}

/// Whether the segment stays on lattice quads with passable corners, as the
/// descent itself does.
fn segment_clear(map: &CompactCognitiveMap, a: Vec2, b: Vec2) -> bool {
    let m = &map.mapping;
    let samples = libm::ceil(4.0 * a.distance(b) / m.cell_size()) as usize + 1;
    (0..=samples).all(|i| {
        let (u, v) = m.to_lattice(a.lerp(b, i as f64 / samples as f64));
        bilinear(map, u, v).is_some()
    })
}

/// Returns the rerouted path and the index of its gate vertex.
fn reroute(
    map: &CompactCognitiveMap,
    path: &Path,
    traj: &TimedTrajectory,
    p: &Pedestrian,
    scenario: &Scenario,
    te: f64,
    locked: usize,
) -> Option<(Path, usize)> {
    let axis = p.velocity.normalized()?;
    let depth = p.reaction_distance + scenario.agent_radius - GATE_DEPTH;
    let gate_at = |t: f64| pedestrian_at(p, t) + axis * depth;
    let speed = scenario.agent_speed;
    let horizon = traj.duration() + 2.0 * scenario.mapping.side() / speed;
    for a in locked..path.vertices.len() {
        let (ta, pa) = (traj.times[a], traj.points[a]);
        if ta >= te {
            break;
        }
        // the agent leaving `pa` at `ta` meets the moving gate
        let f = |t: f64| speed * (t - ta) - gate_at(t).distance(pa);
        let (mut lo, mut hi) = (ta, horizon);
        if !(f(hi) > 0.0) {
            continue;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let g = gate_at(hi);
        if hi >= te || !segment_clear(map, pa, g) {
            continue;
        }
        let Some(join) = (a + 1..path.vertices.len())
            .filter(|&j| traj.times[j] > hi)
            .find(|&j| segment_clear(map, g, traj.points[j]))
        else {
            continue;
        };
        let (u, v) = map.mapping.to_lattice(g);
        let tg = bilinear(map, u, v).map_or(0.5 * (path.mental_times[a] + path.mental_times[join]), |(c, _)| c);
        let mut vertices = path.vertices[..=a].to_vec();
        let mut mental_times = path.mental_times[..=a].to_vec();
        vertices.push(g);
        mental_times.push(tg);
        vertices.extend_from_slice(&path.vertices[join..]);
        mental_times.extend_from_slice(&path.mental_times[join..]);
        return Some((Path { vertices, mental_times, calibration: path.calibration }, a + 1));
    }
    None
}
