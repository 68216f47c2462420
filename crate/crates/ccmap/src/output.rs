//! Output files and their readers.
//!
//! Every file may start with one `# generated_at=<unix seconds>` line; it is
//! the only thing that differs between two runs of the same configuration
//! and can be switched off.

use std::io::Write;

use ccmap_core::lattice::LatticeParams;
use ccmap_core::metrics::{EnsembleStats, Measure, MetricsRecord};
use ccmap_core::planner::{Calibration, CompactCognitiveMap, TimedTrajectory};
use ccmap_core::sim::{SimulationResult, AGENT_ID};
use ccmap_core::Mode;

use crate::error::ConfigError;

const STAMP_PREFIX: &str = "# generated_at=";

pub fn stamp_line(enabled: bool) -> Option<String> {
    enabled.then(|| {
        let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        format!("{STAMP_PREFIX}{secs}")
    })
}

fn float(s: &str, line: usize, col: &str) -> Result<f64, ConfigError> {
    s.trim().parse().map_err(|_| ConfigError::Parse { line, msg: format!("column `{col}`: not a number: `{s}`") })
}

fn int<T: std::str::FromStr>(s: &str, line: usize, col: &str) -> Result<T, ConfigError> {
    s.trim().parse().map_err(|_| ConfigError::Parse { line, msg: format!("column `{col}`: not an integer: `{s}`") })
}

/// A CSV row type with a fixed header.
pub trait Row: Sized {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
    fn parse(fields: &[&str], line: usize) -> Result<Self, ConfigError>;
}

pub fn write_csv<R: Row, W: Write>(mut out: W, rows: &[R], stamp: Option<&str>) -> Result<(), ConfigError> {
    if let Some(s) = stamp {
        writeln!(out, "{s}")?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<R: Row>(rows: &[R], stamp: Option<&str>) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows, stamp).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

pub fn read_csv<R: Row>(text: &str) -> Result<Vec<R>, ConfigError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(R::HEADER.iter().copied()) {
        return Err(ConfigError::Parse { line: 1, msg: format!("expected header `{}`", R::HEADER.join(",")) });
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let fields: Vec<&str> = rec.iter().collect();
        rows.push(R::parse(&fields, line)?);
    }
    Ok(rows)
}

/// Planned agent motion in wall-clock time.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Row for PathRow {
    const HEADER: &'static [&'static str] = &["t_seconds", "x_m", "y_m"];
    fn fields(&self) -> Vec<String> {
        vec![self.t.to_string(), self.x.to_string(), self.y.to_string()]
    }
    fn parse(f: &[&str], line: usize) -> Result<Self, ConfigError> {
        Ok(PathRow { t: float(f[0], line, "t_seconds")?, x: float(f[1], line, "x_m")?, y: float(f[2], line, "y_m")? })
    }
}

pub fn path_rows(traj: &TimedTrajectory) -> Vec<PathRow> {
    traj.times.iter().zip(&traj.points).map(|(&t, p)| PathRow { t, x: p.x, y: p.y }).collect()
}

/// One entity at one instant; the agent is entity 0.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub entity_id: u32,
    pub x: f64,
    pub y: f64,
}

impl Row for TrajectoryRow {
    const HEADER: &'static [&'static str] = &["t", "entity_id", "x", "y"];
    fn fields(&self) -> Vec<String> {
        vec![self.t.to_string(), self.entity_id.to_string(), self.x.to_string(), self.y.to_string()]
    }
    fn parse(f: &[&str], line: usize) -> Result<Self, ConfigError> {
        Ok(TrajectoryRow {
            t: float(f[0], line, "t")?,
            entity_id: int(f[1], line, "entity_id")?,
            x: float(f[2], line, "x")?,
            y: float(f[3], line, "y")?,
        })
    }
}

pub fn trajectory_rows(r: &SimulationResult) -> Vec<TrajectoryRow> {
    let mut rows = Vec::with_capacity(r.times.len() * (r.pedestrians.len() + 1));
    for (k, &t) in r.times.iter().enumerate() {
        let a = r.agent[k];
        rows.push(TrajectoryRow { t, entity_id: AGENT_ID, x: a.x, y: a.y });
        for p in &r.pedestrians {
            let q = p.points[k];
            rows.push(TrajectoryRow { t, entity_id: p.id, x: q.x, y: q.y });
        }
    }
    rows
}

/// Onset of a contact episode and the smallest distance during it.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub t: f64,
    pub id_a: u32,
    pub id_b: u32,
    pub distance: f64,
}

impl Row for EventRow {
    const HEADER: &'static [&'static str] = &["t", "id_a", "id_b", "distance"];
    fn fields(&self) -> Vec<String> {
        vec![self.t.to_string(), self.id_a.to_string(), self.id_b.to_string(), self.distance.to_string()]
    }
    fn parse(f: &[&str], line: usize) -> Result<Self, ConfigError> {
        Ok(EventRow {
            t: float(f[0], line, "t")?,
            id_a: int(f[1], line, "id_a")?,
            id_b: int(f[2], line, "id_b")?,
            distance: float(f[3], line, "distance")?,
        })
    }
}

pub fn event_rows(r: &SimulationResult) -> Vec<EventRow> {
    r.collisions.iter().map(|e| EventRow { t: e.t, id_a: e.id_a, id_b: e.id_b, distance: e.distance }).collect()
}

/// Measures of one run in one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run: usize,
    pub seed: u64,
    pub target: String,
    pub mode: Mode,
    pub completed: bool,
    /// `no_path`, `incomplete` or empty.
    pub failure: String,
    pub length: f64,
    pub safety: f64,
    pub effort: f64,
    pub critical_distance: f64,
    pub pedestrians: usize,
    pub collisions: usize,
}

impl MetricsRow {
    pub fn new(run: usize, seed: u64, target: &str, rec: &MetricsRecord, result: &SimulationResult) -> Self {
        let failure = match (&result.failure, result.path.is_some()) {
            (None, _) => "",
            (Some(_), false) => "no_path",
            (Some(_), true) => "incomplete",
        };
        MetricsRow {
            run,
            seed,
            target: target.to_string(),
            mode: rec.mode,
            completed: rec.completed,
            failure: failure.to_string(),
            length: rec.length,
            safety: rec.safety,
            effort: rec.effort,
            critical_distance: rec.critical_distance,
            pedestrians: rec.pedestrians,
            collisions: rec.collisions,
        }
    }

    pub fn record(&self) -> MetricsRecord {
        MetricsRecord {
            mode: self.mode,
            completed: self.completed,
            length: self.length,
            safety: self.safety,
            effort: self.effort,
            critical_distance: self.critical_distance,
            pedestrians: self.pedestrians,
            collisions: self.collisions,
        }
    }
}

impl Row for MetricsRow {
    const HEADER: &'static [&'static str] =
        &["run", "seed", "target", "mode", "completed", "failure", "L", "S", "E", "d_crt", "pedestrians", "collisions"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.run.to_string(),
            self.seed.to_string(),
            self.target.clone(),
            self.mode.to_string(),
            self.completed.to_string(),
            self.failure.clone(),
            self.length.to_string(),
            self.safety.to_string(),
            self.effort.to_string(),
            self.critical_distance.to_string(),
            self.pedestrians.to_string(),
            self.collisions.to_string(),
        ]
    }
    fn parse(f: &[&str], line: usize) -> Result<Self, ConfigError> {
        Ok(MetricsRow {
            run: int(f[0], line, "run")?,
            seed: int(f[1], line, "seed")?,
            target: f[2].to_string(),
            mode: f[3].parse().map_err(|_| ConfigError::Parse { line, msg: format!("bad mode `{}`", f[3]) })?,
            completed: int(f[4], line, "completed")?,
            failure: f[5].to_string(),
            length: float(f[6], line, "L")?,
            safety: float(f[7], line, "S")?,
            effort: float(f[8], line, "E")?,
            critical_distance: float(f[9], line, "d_crt")?,
            pedestrians: int(f[10], line, "pedestrians")?,
            collisions: int(f[11], line, "collisions")?,
        })
    }
}

/// Per-measure comparison of the two modes.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub measure: String,
    pub mean_avus: f64,
    pub std_avus: f64,
    pub n_avus: usize,
    pub mean_cous: f64,
    pub std_cous: f64,
    pub n_cous: usize,
    /// Welch two-sided; `None` when either mode has fewer than two runs.
    pub p_value: Option<f64>,
}

impl Row for StatsRow {
    const HEADER: &'static [&'static str] =
        &["measure", "mean_avus", "std_avus", "n_avus", "mean_cous", "std_cous", "n_cous", "p_value"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.measure.clone(),
            self.mean_avus.to_string(),
            self.std_avus.to_string(),
            self.n_avus.to_string(),
            self.mean_cous.to_string(),
            self.std_cous.to_string(),
            self.n_cous.to_string(),
            self.p_value.map_or(String::new(), |p| p.to_string()),
        ]
    }
    fn parse(f: &[&str], line: usize) -> Result<Self, ConfigError> {
        Ok(StatsRow {
            measure: f[0].to_string(),
            mean_avus: float(f[1], line, "mean_avus")?,
            std_avus: float(f[2], line, "std_avus")?,
            n_avus: int(f[3], line, "n_avus")?,
            mean_cous: float(f[4], line, "mean_cous")?,
            std_cous: float(f[5], line, "std_cous")?,
            n_cous: int(f[6], line, "n_cous")?,
            p_value: match f[7].trim() {
                "" => None,
                s => Some(float(s, line, "p_value")?),
            },
        })
    }
}

pub fn stats_rows(stats: &EnsembleStats) -> Vec<StatsRow> {
    Measure::ALL
        .iter()
        .map(|&m| {
            let get = |mode| stats.summary(m, mode).map_or((f64::NAN, f64::NAN, 0), |s| (s.mean, s.std, s.n));
            let (mean_avus, std_avus, n_avus) = get(Mode::AvUs);
            let (mean_cous, std_cous, n_cous) = get(Mode::CoUs);
            StatsRow {
                measure: m.as_str().to_string(),
                mean_avus,
                std_avus,
                n_avus,
                mean_cous,
                std_cous,
                n_cous,
                p_value: stats.p_value(m),
            }
        })
        .collect()
}

/// Front speed measured on one lattice size.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub n: usize,
    /// Cells per mental time unit.
    pub front_speed: f64,
    pub offset: f64,
}

impl CalibrationRow {
    pub fn new(n: usize, c: Calibration) -> Self {
        CalibrationRow { n, front_speed: c.front_speed, offset: c.offset }
    }
}

impl Row for CalibrationRow {
    const HEADER: &'static [&'static str] = &["n", "front_speed", "offset"];
    fn fields(&self) -> Vec<String> {
        vec![self.n.to_string(), self.front_speed.to_string(), self.offset.to_string()]
    }
    fn parse(f: &[&str], line: usize) -> Result<Self, ConfigError> {
        Ok(CalibrationRow {
            n: int(f[0], line, "n")?,
            front_speed: float(f[1], line, "front_speed")?,
            offset: float(f[2], line, "offset")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapCell {
    /// Mental arrival time.
    Arrival(f64),
    Unreachable,
    Obstacle,
}

/// Plain-text arrival grid. One text row per lattice row `j = 1..=n`
/// (increasing y), cells in increasing `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapDump {
    pub n: usize,
    /// Mental step.
    pub h: f64,
    /// Arrival threshold.
    pub r_th: f64,
    /// Row-major, index `(j-1)·n + (i-1)`.
    pub cells: Vec<MapCell>,
}

impl MapDump {
    pub fn from_map(map: &CompactCognitiveMap, lattice: &LatticeParams) -> Self {
        let cells = (0..map.mapping.len())
            .map(|k| {
                if map.effective_objects.contains(k) {
                    MapCell::Obstacle
                } else if map.passable(k) && map.arrival[k].is_finite() {
                    MapCell::Arrival(map.arrival[k])
                } else {
                    MapCell::Unreachable
                }
            })
            .collect();
        MapDump { n: map.mapping.n(), h: lattice.mental_step(), r_th: lattice.arrival_threshold, cells }
    }

    pub fn obstacle_count(&self) -> usize {
        self.cells.iter().filter(|c| **c == MapCell::Obstacle).count()
    }

    pub fn render(&self, stamp: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(s) = stamp {
            out.push_str(s);
            out.push('\n');
        }
        out.push_str(&format!("# n={} h={} r_th={}\n", self.n, self.h, self.r_th));
        for row in self.cells.chunks(self.n) {
            let line: Vec<String> = row
                .iter()
                .map(|c| match c {
                    MapCell::Arrival(t) => t.to_string(),
                    MapCell::Unreachable => "inf".to_string(),
                    MapCell::Obstacle => "obs".to_string(),
                })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with(STAMP_PREFIX));
        let (hl, header) = lines.next().ok_or(ConfigError::Parse { line: 1, msg: "empty map dump".into() })?;
        let bad_header = || ConfigError::Parse { line: hl + 1, msg: "expected `# n=<n> h=<h> r_th=<r_th>`".into() };
        let mut fields = header.strip_prefix("# ").ok_or_else(bad_header)?.split_whitespace();
        let mut take = |key: &str| {
            fields
                .next()
                .and_then(|f| f.strip_prefix(key))
                .and_then(|f| f.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(bad_header)
        };
        let n: usize = take("n")?.parse().map_err(|_| bad_header())?;
        let h: f64 = take("h")?.parse().map_err(|_| bad_header())?;
        let r_th: f64 = take("r_th")?.parse().map_err(|_| bad_header())?;
        let mut cells = Vec::with_capacity(n * n);
        let mut rows = 0;
        for (idx, l) in lines {
            let line = idx + 1;
            let before = cells.len();
            for tok in l.split_whitespace() {
                cells.push(match tok {
                    "inf" => MapCell::Unreachable,
                    "obs" => MapCell::Obstacle,
                    _ => MapCell::Arrival(float(tok, line, "arrival")?),
                });
            }
            if cells.len() - before != n {
                return Err(ConfigError::Parse { line, msg: format!("expected {n} cells") });
            }
            rows += 1;
        }
        if rows != n {
            return Err(ConfigError::Parse {
                line: text.lines().count(),
                msg: format!("expected {n} rows, got {rows}"),
            });
        }
        Ok(MapDump { n, h, r_th, cells })
    }
}
