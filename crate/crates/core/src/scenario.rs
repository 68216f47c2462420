//! Scene description shared by the planner, the simulator and the generators.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::geom::{GridMapping, Vec2};

/// Which assumption the agent makes about the humans around it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Humans ignore the agent; they are moving obstacles.
    AvUs,
    /// Humans approached head-on step aside.
    CoUs,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::AvUs, Mode::CoUs];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::AvUs => "avus",
            Mode::CoUs => "cous",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "avus" => Ok(Mode::AvUs),
            "cous" => Ok(Mode::CoUs),
            other => Err(Error::invalid(alloc::format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pedestrian {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Radius of the personal zone in meters.
    pub personal_radius: f64,
    /// Radius of the reaction zone in meters.
    pub reaction_distance: f64,
    pub goal: Vec2,
}

impl Pedestrian {
    pub const DEFAULT_PERSONAL_RADIUS: f64 = 0.4;
    pub const DEFAULT_REACTION_DISTANCE: f64 = 2.0;

    /// A pedestrian walking straight at `goal` with the given speed.
    pub fn heading_to(id: u32, position: Vec2, goal: Vec2, speed: f64) -> Self {
        let velocity = (goal - position).normalized().map_or(Vec2::ZERO, |d| d * speed);
        Pedestrian {
            id,
            position,
            velocity,
            personal_radius: Self::DEFAULT_PERSONAL_RADIUS,
            reaction_distance: Self::DEFAULT_REACTION_DISTANCE,
            goal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.personal_radius > 0.0) {
            return Err(Error::invalid(alloc::format!("pedestrian {}: personal_radius must be positive", self.id)));
        }
        if !(self.reaction_distance > self.personal_radius) {
            return Err(Error::invalid(alloc::format!(
                "pedestrian {}: reaction_distance must exceed personal_radius",
                self.id
            )));
        }
        if !self.position.is_finite() || !self.velocity.is_finite() || !self.goal.is_finite() {
            return Err(Error::invalid(alloc::format!(
                "pedestrian {}: non-finite position, velocity or goal",
                self.id
            )));
        }
        Ok(())
    }
}

/// Static obstacle in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Obstacle {
    Rect { min: Vec2, max: Vec2 },
    Disc { center: Vec2, radius: f64 },
}

impl Obstacle {
    /// Lattice cells covered once the obstacle is grown by the agent radius.
    pub fn cells(&self, m: &GridMapping, agent_radius: f64) -> Vec<usize> {
        match *self {
            Obstacle::Rect { min, max } => m.rect_cells(min, max, agent_radius),
            Obstacle::Disc { center, radius } => m.disc_cells(center, radius + agent_radius),
        }
    }

    /// Euclidean distance from `p` to the obstacle (0 inside).
    pub fn distance(&self, p: Vec2) -> f64 {
        match *self {
            Obstacle::Rect { min, max } => {
                let dx = (min.x - p.x).max(p.x - max.x).max(0.0);
                let dy = (min.y - p.y).max(p.y - max.y).max(0.0);
                libm::sqrt(dx * dx + dy * dy)
            }
            Obstacle::Disc { center, radius } => (p.distance(center) - radius).max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub mapping: GridMapping,
    pub agent_start: Vec2,
    pub agent_radius: f64,
    pub target: Vec2,
    pub nav_tolerance: f64,
    pub pedestrians: Vec<Pedestrian>,
    pub obstacles: Vec<Obstacle>,
    pub mode: Mode,
    /// Sampling step of the trajectory predictor, seconds.
    pub time_base: f64,
    /// m/s
    pub agent_speed: f64,
    pub seed: u64,
}

impl Scenario {
    pub const DEFAULT_AGENT_RADIUS: f64 = 0.2;
    pub const DEFAULT_NAV_TOLERANCE: f64 = 0.2;
    pub const DEFAULT_TIME_BASE: f64 = 0.1;
    pub const DEFAULT_AGENT_SPEED: f64 = 1.0;

    /// Empty default arena with the given start and target.
    pub fn new(agent_start: Vec2, target: Vec2) -> Self {
        Scenario {
            mapping: GridMapping::default(),
            agent_start,
            agent_radius: Self::DEFAULT_AGENT_RADIUS,
            target,
            nav_tolerance: Self::DEFAULT_NAV_TOLERANCE,
            pedestrians: Vec::new(),
            obstacles: Vec::new(),
            mode: Mode::AvUs,
            time_base: Self::DEFAULT_TIME_BASE,
            agent_speed: Self::DEFAULT_AGENT_SPEED,
            seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.mapping;
        if !m.contains(self.agent_start) {
            return Err(Error::invalid("agent_start lies outside the arena"));
        }
        if !m.contains(self.target) {
            return Err(Error::invalid("target lies outside the arena"));
        }
        if self.agent_start == self.target {
            return Err(Error::invalid("agent_start and target coincide"));
        }
        if !(self.nav_tolerance > 0.0) {
            return Err(Error::invalid("nav_tolerance must be positive"));
        }
        if !(self.agent_radius >= 0.0) {
            return Err(Error::invalid("agent_radius must be non-negative"));
        }
        if !(self.time_base > 0.0 && self.time_base.is_finite()) {
            return Err(Error::invalid("time_base must be positive"));
        }
        if !(self.agent_speed > 0.0 && self.agent_speed.is_finite()) {
            return Err(Error::invalid("agent_speed must be positive"));
        }
        for (i, p) in self.pedestrians.iter().enumerate() {
            p.validate()?;
            if p.id == 0 {
                return Err(Error::invalid("pedestrian id 0 is reserved for the agent"));
            }
            if self.pedestrians[..i].iter().any(|q| q.id == p.id) {
                return Err(Error::invalid(alloc::format!("duplicate pedestrian id {}", p.id)));
            }
        }
        Ok(())
    }

    pub fn all_static(&self) -> bool {
        self.pedestrians.iter().all(|p| p.velocity == Vec2::ZERO)
    }
}
