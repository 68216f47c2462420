//! Line-oriented scenario files.
//!
//! ```text
//! arena = 8
//! n = 80
//! agent_start = 1, 4
//! target = 7, 4
//! mode = cous
//!
//! pedestrian:
//!   position = 6, 4
//!   velocity = -1, 0
//!   goal = 0.5, 4
//! ```
//!
//! Top-level keys: `arena`, `n`, `agent_start`, `agent_radius`, `target`,
//! `nav_tolerance`, `mode`, `time_base`, `agent_speed`, `seed`, plus repeated
//! `rect = x0, y0, x1, y1` and `disc = x, y, radius` for static obstacles.
//! A `pedestrian:` line opens a block of indented keys: `id`, `position`,
//! `velocity`, `personal_radius`, `reaction_distance`, `goal`. Only
//! `agent_start` and `target` are required at the top level, and `position`
//! and `velocity` in a block; everything else has a default. `#` starts a
//! comment.

use std::fmt::{self, Write as _};
use std::path::Path;

use ccmap_core::{GridMapping, Mode, Obstacle, Pedestrian, Scenario, Vec2};

use crate::error::ConfigError;

fn at(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Parse { line, msg: msg.into() }
}

fn number(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v.trim().parse().map_err(|_| at(line, format!("`{key}` expects a number, got `{}`", v.trim())))?;
    if !x.is_finite() {
        return Err(at(line, format!("`{key}` must be finite")));
    }
    Ok(x)
}

fn numbers<const N: usize>(line: usize, key: &str, v: &str) -> Result<[f64; N], ConfigError> {
    let parts: Vec<&str> = v.split(',').collect();
    if parts.len() != N {
        return Err(at(line, format!("`{key}` expects {N} comma-separated numbers")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = number(line, key, p)?;
    }
    Ok(out)
}

fn point(line: usize, key: &str, v: &str) -> Result<Vec2, ConfigError> {
    let [x, y] = numbers::<2>(line, key, v)?;
    Ok(Vec2::new(x, y))
}

fn integer<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.trim().parse().map_err(|_| at(line, format!("`{key}` expects a non-negative integer, got `{}`", v.trim())))
}

#[derive(Default)]
struct PedDraft {
    line: usize,
    id: Option<u32>,
    position: Option<Vec2>,
    velocity: Option<Vec2>,
    personal_radius: Option<f64>,
    reaction_distance: Option<f64>,
    goal: Option<Vec2>,
}

impl PedDraft {
    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "id" => self.id = Some(integer(line, key, v)?),
            "position" => self.position = Some(point(line, key, v)?),
            "velocity" => self.velocity = Some(point(line, key, v)?),
            "personal_radius" => self.personal_radius = Some(number(line, key, v)?),
            "reaction_distance" => self.reaction_distance = Some(number(line, key, v)?),
            "goal" => self.goal = Some(point(line, key, v)?),
            _ => return Err(at(line, format!("unknown pedestrian key `{key}`"))),
        }
        Ok(())
    }

    fn finish(self, default_id: u32, side: f64) -> Result<Pedestrian, ConfigError> {
        let position = self.position.ok_or_else(|| at(self.line, "pedestrian is missing `position`"))?;
        let velocity = self.velocity.ok_or_else(|| at(self.line, "pedestrian is missing `velocity`"))?;
        // without a goal the pedestrian walks on until leaving the arena
        let goal = self.goal.unwrap_or_else(|| far_along(position, velocity, side));
        Ok(Pedestrian {
            id: self.id.unwrap_or(default_id),
            position,
            velocity,
            personal_radius: self.personal_radius.unwrap_or(Pedestrian::DEFAULT_PERSONAL_RADIUS),
            reaction_distance: self.reaction_distance.unwrap_or(Pedestrian::DEFAULT_REACTION_DISTANCE),
            goal,
        })
    }
}

/// Last point inside the `side`-wide arena on the ray from `p` along `v`.
fn far_along(p: Vec2, v: Vec2, side: f64) -> Vec2 {
    let Some(d) = v.normalized() else { return p };
    let exit = |pos: f64, dir: f64| {
        if dir > 0.0 {
            (side - pos) / dir
        } else if dir < 0.0 {
            -pos / dir
        } else {
            f64::INFINITY
        }
    };
    let s = exit(p.x, d.x).min(exit(p.y, d.y)).max(0.0);
    let q = p + d * s;
    Vec2::new(q.x.clamp(0.0, side), q.y.clamp(0.0, side))
}

/// Parses scenario text. Errors carry the 1-based line number; invariant
/// violations of the finished scenario are reported by name.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let mut arena = None;
    let mut n = None;
    let mut start = None;
    let mut target = None;
    let mut s = Scenario::new(Vec2::ZERO, Vec2::ZERO);
    let mut drafts: Vec<PedDraft> = Vec::new();
    let mut in_block = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indented = content.starts_with([' ', '\t']);
        let content = content.trim();
        if content == "pedestrian:" {
            if indented {
                return Err(at(line, "`pedestrian:` must not be indented"));
            }
            drafts.push(PedDraft { line, ..Default::default() });
            in_block = true;
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| at(line, "expected `key = value`"))?;
        let key = key.trim();
        if indented {
            match drafts.last_mut() {
                Some(d) if in_block => d.set(line, key, value)?,
                _ => return Err(at(line, "indented key outside a pedestrian block")),
            }
            continue;
        }
        in_block = false;
        match key {
            "arena" => arena = Some(number(line, key, value)?),
            "n" => n = Some(integer::<usize>(line, key, value)?),
            "agent_start" => start = Some(point(line, key, value)?),
            "agent_radius" => s.agent_radius = number(line, key, value)?,
            "target" => target = Some(point(line, key, value)?),
            "nav_tolerance" => s.nav_tolerance = number(line, key, value)?,
            "mode" => s.mode = value.parse::<Mode>().map_err(|e| at(line, e.to_string()))?,
            "time_base" => s.time_base = number(line, key, value)?,
            "agent_speed" => s.agent_speed = number(line, key, value)?,
            "seed" => s.seed = integer(line, key, value)?,
            "rect" => {
                let [x0, y0, x1, y1] = numbers::<4>(line, key, value)?;
                if !(x0 <= x1 && y0 <= y1) {
                    return Err(at(line, "`rect` corners must be ordered min then max"));
                }
                s.obstacles.push(Obstacle::Rect { min: Vec2::new(x0, y0), max: Vec2::new(x1, y1) });
            }
            "disc" => {
                let [x, y, r] = numbers::<3>(line, key, value)?;
                if !(r >= 0.0) {
                    return Err(at(line, "`disc` radius must be non-negative"));
                }
                s.obstacles.push(Obstacle::Disc { center: Vec2::new(x, y), radius: r });
            }
            _ => return Err(at(line, format!("unknown key `{key}`"))),
        }
    }

    let default = GridMapping::default();
    let side = arena.unwrap_or(default.side());
    let n = n.unwrap_or(default.n());
    s.mapping = GridMapping::new(side, n).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    s.agent_start = start.ok_or_else(|| ConfigError::Invalid("missing required key `agent_start`".into()))?;
    s.target = target.ok_or_else(|| ConfigError::Invalid("missing required key `target`".into()))?;
    for (i, d) in drafts.into_iter().enumerate() {
        s.pedestrians.push(d.finish(i as u32 + 1, side)?);
    }
    s.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(s)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

struct P(Vec2);

impl fmt::Display for P {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}", self.0.x, self.0.y)
    }
}

/// Writes every field explicitly, so the text parses back to an equal
/// scenario.
pub fn emit_scenario(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "arena = {}", s.mapping.side());
    let _ = writeln!(out, "n = {}", s.mapping.n());
    let _ = writeln!(out, "agent_start = {}", P(s.agent_start));
    let _ = writeln!(out, "agent_radius = {}", s.agent_radius);
    let _ = writeln!(out, "target = {}", P(s.target));
    let _ = writeln!(out, "nav_tolerance = {}", s.nav_tolerance);
    let _ = writeln!(out, "mode = {}", s.mode);
    let _ = writeln!(out, "time_base = {}", s.time_base);
    let _ = writeln!(out, "agent_speed = {}", s.agent_speed);
    let _ = writeln!(out, "seed = {}", s.seed);
    for o in &s.obstacles {
        let _ = match *o {
            Obstacle::Rect { min, max } => writeln!(out, "rect = {}, {}, {}, {}", min.x, min.y, max.x, max.y),
            Obstacle::Disc { center, radius } => writeln!(out, "disc = {}, {}, {}", center.x, center.y, radius),
        };
    }
    for p in &s.pedestrians {
        let _ = writeln!(out, "\npedestrian:");
        let _ = writeln!(out, "  id = {}", p.id);
        let _ = writeln!(out, "  position = {}", P(p.position));
        let _ = writeln!(out, "  velocity = {}", P(p.velocity));
        let _ = writeln!(out, "  personal_radius = {}", p.personal_radius);
        let _ = writeln!(out, "  reaction_distance = {}", p.reaction_distance);
        let _ = writeln!(out, "  goal = {}", P(p.goal));
    }
    out
}
