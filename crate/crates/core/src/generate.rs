//! Seeded scene generators.
//!
//! The corridor families share one layout on the default 8 m arena: a
//! corridor along x centered at `y = 4`, walls above and below it, and a
//! door in an end wall at `x ∈ [7.6, 8]`. The agent starts near the open end
//! and walks toward the door against the pedestrians.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{GridMapping, Vec2};
use crate::scenario::{Obstacle, Pedestrian, Scenario};

/// Inner face of the door wall.
pub const DOOR_WALL_X: f64 = 7.6;
/// Distance in front of the door wall where door targets are placed.
pub const TARGET_SETBACK: f64 = 0.3;
const CORRIDOR_AXIS: f64 = 4.0;
const AGENT_START_X: f64 = 0.8;
const PEDESTRIAN_GOAL_X: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    StaticDemo,
    DynamicDemo,
    HeadOn,
    ClutteredFlow,
    DenseGroup,
    LineUp,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::StaticDemo,
        Family::DynamicDemo,
        Family::HeadOn,
        Family::ClutteredFlow,
        Family::DenseGroup,
        Family::LineUp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::StaticDemo => "static_demo",
            Family::DynamicDemo => "dynamic_demo",
            Family::HeadOn => "head_on",
            Family::ClutteredFlow => "cluttered_flow",
            Family::DenseGroup => "dense_group",
            Family::LineUp => "line_up",
        }
    }

    pub fn has_door(self) -> bool {
        matches!(self, Family::ClutteredFlow | Family::DenseGroup | Family::LineUp)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| Error::invalid(alloc::format!("unknown template `{}`", s.trim())))
    }
}

/// Part of the door the agent aims at; left and right as seen by the agent
/// walking toward the door (+x), so left is +y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DoorSegment {
    Center,
    LeftExtreme,
    RightExtreme,
}

impl DoorSegment {
    pub fn as_str(self) -> &'static str {
        match self {
            DoorSegment::Center => "center",
            DoorSegment::LeftExtreme => "left_extreme",
            DoorSegment::RightExtreme => "right_extreme",
        }
    }

    /// Lateral interval `[lo, hi]` of the segment.
    pub fn interval(self, door_center: f64, door_width: f64) -> (f64, f64) {
        let lo = door_center - 0.5 * door_width;
        let q = 0.25 * door_width;
        match self {
            DoorSegment::RightExtreme => (lo, lo + q),
            DoorSegment::Center => (lo + q, lo + 3.0 * q),
            DoorSegment::LeftExtreme => (lo + 3.0 * q, lo + 4.0 * q),
        }
    }
}

impl fmt::Display for DoorSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DoorSegment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "center" => Ok(DoorSegment::Center),
            "left_extreme" | "left" => Ok(DoorSegment::LeftExtreme),
            "right_extreme" | "right" => Ok(DoorSegment::RightExtreme),
            other => Err(Error::invalid(alloc::format!("unknown door segment `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTemplate {
    pub family: Family,
    pub corridor_width: f64,
    /// Lateral position of the door center.
    pub door_center: f64,
    pub door_width: f64,
    pub pedestrians: usize,
    /// Walking speed next to the door, m/s.
    pub speed_near: f64,
    /// Walking speed farthest from the door, m/s.
    pub speed_far: f64,
    /// Half-width of uniform jitter on speeds, m/s.
    pub speed_jitter: f64,
    /// Half-width of uniform lateral jitter, meters.
    pub lateral_jitter: f64,
    /// Growth of the flow's lateral half-extent per meter away from the door.
    pub fan: f64,
    /// Longitudinal spacing of the chain, meters.
    pub spacing: f64,
    /// Region of the corridor where pedestrians start, `[near_x, far_x]`
    /// with `far_x` closest to the door.
    pub spawn_x: (f64, f64),
    pub personal_radius: f64,
    pub reaction_distance: f64,
    pub segment: DoorSegment,
    pub seed: u64,
    pub retries: usize,
}

impl ScenarioTemplate {
    pub fn new(family: Family) -> Self {
        let base = ScenarioTemplate {
            family,
            corridor_width: 4.0,
            door_center: CORRIDOR_AXIS,
            door_width: 2.0,
            pedestrians: 0,
            speed_near: 0.8,
            speed_far: 0.8,
            speed_jitter: 0.0,
            lateral_jitter: 0.0,
            fan: 0.0,
            spacing: 1.0,
            spawn_x: (3.0, 7.0),
            personal_radius: Pedestrian::DEFAULT_PERSONAL_RADIUS,
            reaction_distance: Pedestrian::DEFAULT_REACTION_DISTANCE,
            segment: DoorSegment::Center,
            seed: 0,
            retries: 32,
        };
        match family {
            Family::StaticDemo => ScenarioTemplate { pedestrians: 6, speed_near: 0.0, speed_far: 0.0, ..base },
            Family::DynamicDemo => ScenarioTemplate { pedestrians: 5, speed_near: 0.6, speed_far: 1.0, ..base },
            Family::HeadOn => ScenarioTemplate { pedestrians: 1, speed_near: 1.0, speed_far: 1.0, ..base },
            Family::ClutteredFlow => ScenarioTemplate {
                corridor_width: 5.0,
                door_width: 3.0,
                pedestrians: 6,
                fan: 0.15,
                speed_near: 0.5,
                speed_far: 1.1,
                speed_jitter: 0.05,
                lateral_jitter: 0.2,
                spawn_x: (3.2, 7.1),
                ..base
            },
            Family::DenseGroup => ScenarioTemplate {
                corridor_width: 5.75,
                pedestrians: 5,
                speed_near: 0.8,
                speed_far: 0.8,
                speed_jitter: 0.02,
                lateral_jitter: 0.02,
                spawn_x: (5.0, 5.0),
                ..base
            },
            Family::LineUp => ScenarioTemplate {
                door_width: 1.0,
                pedestrians: 5,
                speed_near: 0.7,
                speed_far: 0.9,
                speed_jitter: 0.05,
                lateral_jitter: 0.15,
                spacing: 1.0,
                spawn_x: (2.4, 7.1),
                ..base
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_segment(mut self, segment: DoorSegment) -> Self {
        self.segment = segment;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.corridor_width > 0.0
            && self.corridor_width <= 8.0
            && self.door_width > 0.0
            && self.door_width <= self.corridor_width
            && self.speed_near >= 0.0
            && self.speed_far >= 0.0
            && self.speed_jitter >= 0.0
            && self.lateral_jitter >= 0.0
            && self.spacing > 0.0
            && self.spawn_x.0 <= self.spawn_x.1
            && self.personal_radius > 0.0
            && self.reaction_distance > self.personal_radius;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(alloc::format!("template {} has out-of-range parameters", self.family)))
        }
    }

    fn corridor(&self) -> (f64, f64) {
        (CORRIDOR_AXIS - 0.5 * self.corridor_width, CORRIDOR_AXIS + 0.5 * self.corridor_width)
    }
}

/// Target sampled uniformly in the named door segment, set back from the
/// door wall.
pub fn door_segment_target<R: Rng>(template: &ScenarioTemplate, segment: DoorSegment, rng: &mut R) -> Result<Vec2> {
    if !template.family.has_door() {
        return Err(Error::invalid(alloc::format!("template {} has no door", template.family)));
    }
    let (lo, hi) = segment.interval(template.door_center, template.door_width);
    Ok(Vec2::new(DOOR_WALL_X - TARGET_SETBACK, rng.random_range(lo..=hi)))
}

/// Walls of a corridor family: long walls above and below and the door wall
/// with its opening.
pub fn corridor_obstacles(t: &ScenarioTemplate) -> Vec<Obstacle> {
    let (lo, hi) = t.corridor();
    let side = GridMapping::default().side();
    let mut out = Vec::new();
    if lo > 0.0 {
        out.push(Obstacle::Rect { min: Vec2::new(0.0, 0.0), max: Vec2::new(side, lo) });
    }
    if hi < side {
        out.push(Obstacle::Rect { min: Vec2::new(0.0, hi), max: Vec2::new(side, side) });
    }
    let (d_lo, d_hi) = (t.door_center - 0.5 * t.door_width, t.door_center + 0.5 * t.door_width);
    if d_lo > lo {
        out.push(Obstacle::Rect { min: Vec2::new(DOOR_WALL_X, lo), max: Vec2::new(side, d_lo) });
    }
    if d_hi < hi {
        out.push(Obstacle::Rect { min: Vec2::new(DOOR_WALL_X, d_hi), max: Vec2::new(side, hi) });
    }
    out
}

fn stream_rng(seed: u64, attempt: usize, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((attempt as u64) << 32) | stream);
    rng
}

fn jitter<R: Rng>(rng: &mut R, half: f64) -> f64 {
    if half > 0.0 {
        rng.random_range(-half..=half)
    } else {
        0.0
    }
}

/// Draws per pedestrian before the layout attempt is given up.
const PLACEMENT_TRIES: usize = 64;

/// Generates a concrete scene. Each pedestrian is redrawn from its own stream
/// until its personal zone clears the earlier ones and the agent's start; if
/// one cannot be placed the whole layout is redrawn from the next sub-seed.
pub fn generate(t: &ScenarioTemplate) -> Result<Scenario> {
    t.validate()?;
    for attempt in 0..=t.retries {
        if let Some(s) = draw(t, attempt)? {
            s.validate()?;
            return Ok(s);
        }
    }
    Err(Error::TemplateInfeasible { retries: t.retries })
}

fn draw(t: &ScenarioTemplate, attempt: usize) -> Result<Option<Scenario>> {
    let mut layout = stream_rng(t.seed, attempt, 0);
    let axis = CORRIDOR_AXIS;
    let (start, target) = match t.family {
        Family::StaticDemo | Family::DynamicDemo | Family::HeadOn => (Vec2::new(1.0, axis), Vec2::new(7.5, axis)),
        _ => (Vec2::new(AGENT_START_X, axis), door_segment_target(t, t.segment, &mut layout)?),
    };
    let mut s = Scenario::new(start, target);
    s.seed = t.seed;
    if t.family.has_door() {
        s.obstacles = corridor_obstacles(t);
    }
    let (lo, hi) = t.corridor();
    let margin = t.personal_radius + 0.1;
    let ramp = |x: f64| {
        let (near, far) = t.spawn_x;
        let f = if far > near { ((far - x) / (far - near)).clamp(0.0, 1.0) } else { 0.0 };
        t.speed_near + (t.speed_far - t.speed_near) * f
    };

    for i in 0..t.pedestrians {
        let mut rng = stream_rng(t.seed, attempt, i as u64 + 1);
        let id = i as u32 + 1;
        let mut placed = None;
        for _ in 0..PLACEMENT_TRIES {
            let p = place(t, &mut rng, id, &ramp, (lo, hi), margin);
            if fits(&s, &p, t) {
                placed = Some(p);
                break;
            }
        }
        match placed {
            Some(p) => s.pedestrians.push(p),
            None => return Ok(None),
        }
    }
    Ok(Some(s))
}

/// One candidate pedestrian drawn from `rng`.
fn place<R: Rng>(
    t: &ScenarioTemplate,
    rng: &mut R,
    id: u32,
    ramp: &dyn Fn(f64) -> f64,
    (lo, hi): (f64, f64),
    margin: f64,
) -> Pedestrian {
    let axis = CORRIDOR_AXIS;
    let i = id as usize - 1;
    let (position, goal, speed) = match t.family {
        Family::StaticDemo => {
            let p = Vec2::new(rng.random_range(2.0..=6.5), rng.random_range(1.5..=6.5));
            (p, p, 0.0)
        }
        Family::DynamicDemo => {
            let p = Vec2::new(rng.random_range(2.5..=6.5), rng.random_range(1.5..=6.5));
            let g = Vec2::new(rng.random_range(0.5..=2.0), rng.random_range(0.5..=7.5));
            (p, g, t.speed_near + (t.speed_far - t.speed_near) * rng.random::<f64>())
        }
        Family::HeadOn => (Vec2::new(6.0, axis), Vec2::new(0.5, axis), t.speed_near),
        Family::ClutteredFlow => {
            let x = rng.random_range(t.spawn_x.0..=t.spawn_x.1);
            let half = 0.5 * t.door_width + t.fan * (DOOR_WALL_X - x);
            let y = (t.door_center + rng.random_range(-half..=half)).clamp(lo + margin, hi - margin);
            let gy = (y + jitter(rng, t.lateral_jitter)).clamp(lo + margin, hi - margin);
            (Vec2::new(x, y), Vec2::new(PEDESTRIAN_GOAL_X, gy), ramp(x) + jitter(rng, t.speed_jitter))
        }
        Family::DenseGroup => {
            // evenly spaced across the corridor, an odd count puts one on the axis
            let pitch = t.corridor_width / t.pedestrians as f64;
            let y = lo + pitch * (i as f64 + 0.5) + jitter(rng, t.lateral_jitter);
            let x = t.spawn_x.0 + jitter(rng, 0.05);
            (Vec2::new(x, y), Vec2::new(PEDESTRIAN_GOAL_X, y), ramp(x) + jitter(rng, t.speed_jitter))
        }
        Family::LineUp => {
            let x = t.spawn_x.1 - t.spacing * i as f64 + jitter(rng, 0.1 * t.spacing);
            let half = 0.5 * t.door_width;
            let y = t.door_center + jitter(rng, t.lateral_jitter.min(half));
            (Vec2::new(x, y), Vec2::new(PEDESTRIAN_GOAL_X, y), ramp(x) + jitter(rng, t.speed_jitter))
        }
    };
    let mut p = Pedestrian::heading_to(id, position, goal, speed.max(0.0));
    p.personal_radius = t.personal_radius;
    p.reaction_distance = t.reaction_distance;
    p
}

/// Whether `p` can join the pedestrians already placed in `s`.
fn fits(s: &Scenario, p: &Pedestrian, t: &ScenarioTemplate) -> bool {
    let clear = t.personal_radius + s.agent_radius + 0.3;
    s.mapping.contains(p.position)
        && s.mapping.contains(p.goal)
        && p.position.distance(s.agent_start) >= clear
        && s.pedestrians.iter().all(|q| q.position.distance(p.position) >= q.personal_radius + p.personal_radius)
        && s.obstacles.iter().all(|o| o.distance(p.position) >= 0.5 * p.personal_radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_partition_the_door() {
        let (c, w) = (4.0, 2.0);
        let r = DoorSegment::RightExtreme.interval(c, w);
        let m = DoorSegment::Center.interval(c, w);
        let l = DoorSegment::LeftExtreme.interval(c, w);
        assert_eq!(r.0, 3.0);
        assert_eq!(r.1, m.0);
        assert_eq!(m.1, l.0);
        assert_eq!(l.1, 5.0);
        assert!(((m.1 - m.0) - 0.5 * w).abs() < 1e-12);
        assert!(((l.1 - l.0) - 0.25 * w).abs() < 1e-12);
    }

    #[test]
    fn every_family_generates_valid_scenes() {
        for f in Family::ALL {
            for seed in 0..5 {
                let s = generate(&ScenarioTemplate::new(f).with_seed(seed)).unwrap();
                s.validate().unwrap();
                assert_eq!(s.pedestrians.len(), ScenarioTemplate::new(f).pedestrians);
            }
        }
    }

    #[test]
    fn same_seed_same_scene() {
        let t = ScenarioTemplate::new(Family::ClutteredFlow).with_seed(42);
        assert_eq!(generate(&t).unwrap(), generate(&t).unwrap());
        assert_ne!(generate(&t).unwrap(), generate(&t.clone().with_seed(43)).unwrap());
    }

    #[test]
    fn adding_a_pedestrian_keeps_the_others() {
        let t = ScenarioTemplate::new(Family::ClutteredFlow).with_seed(3);
        let a = generate(&ScenarioTemplate { pedestrians: 4, retries: 0, ..t.clone() }).unwrap();
        let b = generate(&ScenarioTemplate { pedestrians: 5, retries: 0, ..t }).unwrap();
        assert_eq!(a.pedestrians[..], b.pedestrians[..4]);
    }

    #[test]
    fn impossible_crowd_is_reported() {
        let t = ScenarioTemplate { pedestrians: 40, retries: 3, ..ScenarioTemplate::new(Family::ClutteredFlow) };
        assert_eq!(generate(&t), Err(Error::TemplateInfeasible { retries: 3 }));
    }

    #[test]
    fn door_target_lies_in_segment() {
        let t = ScenarioTemplate::new(Family::ClutteredFlow);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for seg in [DoorSegment::Center, DoorSegment::LeftExtreme, DoorSegment::RightExtreme] {
            let (lo, hi) = seg.interval(t.door_center, t.door_width);
            for _ in 0..50 {
                let p = door_segment_target(&t, seg, &mut rng).unwrap();
                assert!(p.y >= lo && p.y <= hi);
            }
        }
        assert!(door_segment_target(&ScenarioTemplate::new(Family::HeadOn), DoorSegment::Center, &mut rng).is_err());
    }
}
