//! Heuristic model of how a walking human reacts to an approaching agent.
//!
//! A human cooperates only when the agent enters the reaction zone nearly
//! along their visual axis (within ±5°). Cooperation adds a lateral component
//! of half the walking speed, perpendicular to the original velocity, so
//! progress toward the goal is preserved. While the side is still unknown
//! to the agent, both outcomes are kept as a [`BranchPair`]; the agent only
//! has to avoid the overlap of the two personal zones.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{GridMapping, Vec2};
use crate::scenario::Pedestrian;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HumanModel {
    /// Half-width of the cooperation cone around the visual axis, degrees.
    pub crossing_angle_deg: f64,
    /// Lateral speed as a fraction of the walking speed.
    pub lateral_gain: f64,
}

impl Default for HumanModel {
    fn default() -> Self {
        HumanModel { crossing_angle_deg: 5.0, lateral_gain: 0.5 }
    }
}

/// Direction a human steps toward, seen from the human.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Signed angle in degrees from the human's heading to the ray toward
/// `point`; positive when the point is on the human's left.
pub fn crossing_angle(human_pos: Vec2, human_vel: Vec2, point: Vec2) -> Result<f64> {
    if !(human_vel.norm_sq() > 0.0) {
        return Err(Error::NoVisualAxis);
    }
    let ray = point - human_pos;
    Ok(libm::atan2(human_vel.cross(ray), human_vel.dot(ray)).to_degrees())
}

/// Whether an agent of radius `agent_radius` at `point` triggers cooperation:
/// its disc touches the reaction zone and it sits inside the crossing cone.
/// A standing human never cooperates.
pub fn cooperation_eligible(human: &Pedestrian, point: Vec2, agent_radius: f64, model: &HumanModel) -> bool {
    if human.position.distance(point) > human.reaction_distance + agent_radius {
        return false;
    }
    match crossing_angle(human.position, human.velocity, point) {
        Ok(a) => a.abs() < model.crossing_angle_deg,
        Err(_) => false,
    }
}

/// `v_old + w` with `w ⊥ v_old` and `‖w‖ = gain·‖v_old‖`; `Left` uses the
/// counterclockwise normal.
pub fn cooperative_velocity(v_old: Vec2, side: Side, model: &HumanModel) -> Result<Vec2> {
    if !(v_old.norm_sq() > 0.0) {
        return Err(Error::DegenerateVelocity);
    }
    let normal = match side {
        Side::Left => v_old.perp_ccw(),
        Side::Right => v_old.perp_cw(),
    };
    Ok(v_old + normal * model.lateral_gain)
}

/// The side a human steps toward to widen the gap to an agent at `agent`:
/// away from the agent, and to the right when the agent is dead ahead.
pub fn dodge_side(human_pos: Vec2, human_vel: Vec2, agent: Vec2) -> Side {
    if human_vel.cross(agent - human_pos) < 0.0 {
        Side::Left
    } else {
        Side::Right
    }
}

/// The two hypothetical futures of a cooperating human, both starting at
/// `origin` when cooperation begins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPair {
    pub onset_step: usize,
    pub origin: Vec2,
    pub left_velocity: Vec2,
    pub right_velocity: Vec2,
    pub personal_radius: f64,
}

impl BranchPair {
    pub fn new(
        onset_step: usize,
        origin: Vec2,
        velocity: Vec2,
        personal_radius: f64,
        model: &HumanModel,
    ) -> Result<Self> {
        Ok(BranchPair {
            onset_step,
            origin,
            left_velocity: cooperative_velocity(velocity, Side::Left, model)?,
            right_velocity: cooperative_velocity(velocity, Side::Right, model)?,
            personal_radius,
        })
    }

    /// Branch centers `elapsed` seconds after onset.
    pub fn centers(&self, elapsed: f64) -> (Vec2, Vec2) {
        (self.origin + self.left_velocity * elapsed, self.origin + self.right_velocity * elapsed)
    }

    pub fn separation(&self, elapsed: f64) -> f64 {
        let (l, r) = self.centers(elapsed);
        l.distance(r)
    }
}

/// Cells inside both inflated branch discs `elapsed` seconds after onset.
pub fn virtual_obstacle(branches: &BranchPair, agent_radius: f64, m: &GridMapping, elapsed: f64) -> Vec<usize> {
    let mut out = Vec::new();
    for_each_virtual_cell(branches, agent_radius, m, elapsed, |k| out.push(k));
    out
}

pub(crate) fn for_each_virtual_cell(
    branches: &BranchPair,
    agent_radius: f64,
    m: &GridMapping,
    elapsed: f64,
    mut f: impl FnMut(usize),
) {
    let radius = branches.personal_radius + agent_radius;
    let (l, r) = branches.centers(elapsed);
    if l.distance(r) >= 2.0 * radius {
        return;
    }
    let r2 = radius * radius;
    m.for_each_disc_cell(l, radius, |k| {
        if (m.center(k) - r).norm_sq() < r2 {
            f(k);
        }
    });
}
