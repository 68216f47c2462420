//! Execution of a one-shot plan among pedestrians that may react to the agent.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::{GridMapping, Vec2};
use crate::planner::{self, CompactCognitiveMap, Path, PlannerConfig, TimedTrajectory};
use crate::scenario::{Mode, Scenario};
use crate::social::{self, HumanModel, Side};

/// Entity id of the agent in trajectories and events.
pub const AGENT_ID: u32 = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Execution step in seconds.
    pub dt: f64,
    /// Hard stop in seconds.
    pub time_cap: f64,
    /// After the agent leaves the reaction zone a cooperating pedestrian
    /// turns back toward their goal at the original speed; otherwise they keep
    /// the cooperative velocity.
    pub reaim_after_cooperation: bool,
    pub human: HumanModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { dt: 0.05, time_cap: 60.0, reaim_after_cooperation: true, human: HumanModel::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CooperationStatus {
    Idle,
    Active(Side),
    Finished,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianState {
    pub id: u32,
    pub start: Vec2,
    pub position: Vec2,
    pub velocity: Vec2,
    /// Original walking speed.
    pub speed: f64,
    pub goal: Vec2,
    pub personal_radius: f64,
    pub reaction_distance: f64,
    pub cooperation: CooperationStatus,
    pub cooperated: bool,
    /// Reached the goal or left the arena; no longer moves or collides.
    pub arrived: bool,
    pub travelled: f64,
}

impl PedestrianState {
    /// Traveled length plus the straight remainder to the goal, relative to
    /// the straight start-goal distance.
    pub fn elongation(&self) -> f64 {
        let straight = self.start.distance(self.goal);
        if straight == 0.0 {
            return 1.0;
        }
        (self.travelled + self.position.distance(self.goal)) / straight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub t: f64,
    pub mapping: GridMapping,
    pub agent_position: Vec2,
    pub agent_radius: f64,
    pub agent_speed: f64,
    pub plan: TimedTrajectory,
    pub agent_done: bool,
    pub pedestrians: Vec<PedestrianState>,
    contact: Vec<Option<usize>>,
    pub collisions: Vec<CollisionEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionEvent {
    /// Onset of the contact episode.
    pub t: f64,
    pub id_a: u32,
    pub id_b: u32,
    /// Smallest distance seen during the episode.
    pub distance: f64,
}

impl WorldState {
    pub fn new(scenario: &Scenario, plan: TimedTrajectory) -> Self {
        let pedestrians: Vec<PedestrianState> = scenario
            .pedestrians
            .iter()
            .map(|p| PedestrianState {
                id: p.id,
                start: p.position,
                position: p.position,
                velocity: p.velocity,
                speed: p.velocity.norm(),
                goal: p.goal,
                personal_radius: p.personal_radius,
                reaction_distance: p.reaction_distance,
                cooperation: CooperationStatus::Idle,
                cooperated: false,
                arrived: false,
                travelled: 0.0,
            })
            .collect();
        WorldState {
            t: 0.0,
            mapping: scenario.mapping,
            agent_position: plan.position_at(0.0),
            agent_radius: scenario.agent_radius,
            agent_speed: scenario.agent_speed,
            plan,
            agent_done: false,
            contact: alloc::vec![None; pedestrians.len()],
            pedestrians,
            collisions: Vec::new(),
        }
    }

    /// Where the agent will be `dt` seconds from now.
    fn agent_ahead(&self, dt: f64) -> Vec2 {
        self.plan.position_at(self.t + dt)
    }
}

/// Time resolution at which a human notices the agent entering the cone.
const PERCEPTION_PERIOD: f64 = 0.005;

/// Agent within the reaction zone, which only reaches forward along the way
/// to the goal.
fn in_zone(p: &PedestrianState, at: Vec2, agent: Vec2, agent_radius: f64) -> bool {
    let ahead = (agent - at).dot(p.goal - at) > 0.0;
    ahead && at.distance(agent) <= p.reaction_distance + agent_radius
}

/// Advances the world by `dt` seconds.
pub fn step_world(w: &mut WorldState, dt: f64, mode: Mode, cfg: &SimConfig) {
    debug_assert!(dt > 0.0);
    let agent = w.agent_position;
    for i in 0..w.pedestrians.len() {
        let p = &w.pedestrians[i];
        if p.arrived {
            continue;
        }
        let inside = !w.agent_done && in_zone(p, p.position, agent, w.agent_radius);
        let mut next = None;
        match p.cooperation {
            CooperationStatus::Idle if mode == Mode::CoUs && !w.agent_done => {
                // humans watch continuously, so the last step is scanned finely
                // for a moment with the agent in the zone and inside the cone
                let looks = libm::ceil(dt / PERCEPTION_PERIOD) as usize;
                let eligible = (0..=looks).any(|k| {
                    let back = dt * k as f64 / looks as f64;
                    if k > 0 && back > w.t {
                        return false;
                    }
                    let a = w.plan.position_at(w.t - back);
                    let q = p.position - p.velocity * back;
                    in_zone(p, q, a, w.agent_radius)
                        && social::crossing_angle(q, p.velocity, a)
                            .is_ok_and(|x| x.abs() < cfg.human.crossing_angle_deg)
                });
                if eligible {
                    // the side away from where the agent will pass
                    let gap = p.position.distance(agent);
                    let meet = gap / (w.agent_speed + p.velocity.norm());
                    let side = social::dodge_side(p.position, p.velocity, w.agent_ahead(meet));
                    if let Ok(v) = social::cooperative_velocity(p.velocity, side, &cfg.human) {
                        next = Some((v, CooperationStatus::Active(side)));
                    }
                }
            }
            CooperationStatus::Active(_) if !inside => {
                let v = if cfg.reaim_after_cooperation {
                    (p.goal - p.position).normalized().map_or(Vec2::ZERO, |d| d * p.speed)
                } else {
                    p.velocity
                };
                next = Some((v, CooperationStatus::Finished));
            }
            _ => {}
        }
        if let Some((v, status)) = next {
            let p = &mut w.pedestrians[i];
            p.velocity = v;
            if let CooperationStatus::Active(_) = status {
                p.cooperated = true;
            }
            p.cooperation = status;
        }
    }

    w.t += dt;
    if !w.agent_done {
        w.agent_position = w.plan.position_at(w.t);
        w.agent_done = w.t >= w.plan.duration();
    }

    let side = w.mapping.side();
    for p in &mut w.pedestrians {
        if p.arrived {
            continue;
        }
        let stride = p.velocity.norm() * dt;
        let to_goal = p.position.distance(p.goal);
        let heading_home = p.velocity.dot(p.goal - p.position) > 0.0;
        if stride > 0.0 && to_goal <= stride && heading_home {
            p.travelled += to_goal;
            p.position = p.goal;
            p.arrived = true;
            continue;
        }
        let mut q = p.position + p.velocity * dt;
        if !w.mapping.contains(q) {
            q = Vec2::new(q.x.clamp(0.0, side), q.y.clamp(0.0, side));
            p.arrived = true;
        }
        p.travelled += q.distance(p.position);
        p.position = q;
    }

    for (i, p) in w.pedestrians.iter().enumerate() {
        let d = p.position.distance(w.agent_position);
        let touching = !w.agent_done && !p.arrived && d < p.personal_radius + w.agent_radius;
        match (touching, w.contact[i]) {
            (true, None) => {
                w.contact[i] = Some(w.collisions.len());
                w.collisions.push(CollisionEvent { t: w.t, id_a: AGENT_ID, id_b: p.id, distance: d });
            }
            (true, Some(e)) => {
                let ev = &mut w.collisions[e];
                ev.distance = ev.distance.min(d);
            }
            (false, _) => w.contact[i] = None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PedestrianTrace {
    pub id: u32,
    pub points: Vec<Vec2>,
    pub elongation: f64,
    pub cooperated: bool,
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub mode: Mode,
    /// Common time axis of all trajectories.
    pub times: Vec<f64>,
    pub agent: Vec<Vec2>,
    pub pedestrians: Vec<PedestrianTrace>,
    pub collisions: Vec<CollisionEvent>,
    pub completed: bool,
    /// Why the run did not complete, when known.
    pub failure: Option<Error>,
    pub map: CompactCognitiveMap,
    pub path: Option<Path>,
}

impl SimulationResult {
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for p in &self.pedestrians {
            for (a, q) in self.agent.iter().zip(&p.points) {
                best = best.min(a.distance(*q));
            }
        }
        best
    }
}

/// Plans once under `mode` and executes the plan.
///
/// Planning failures that mean "no way through" are recorded in the result;
/// numerical failures are returned as errors.
pub fn simulate(
    scenario: &Scenario,
    mode: Mode,
    planner_cfg: &PlannerConfig,
    cfg: &SimConfig,
) -> Result<SimulationResult> {
    if !(cfg.dt > 0.0) {
        return Err(Error::invalid("simulation dt must be positive"));
    }
    let planner::Plan { map, path } = planner::plan(scenario, mode, planner_cfg)?;
    let Some(path) = path else {
        return Ok(SimulationResult {
            mode,
            times: Vec::new(),
            agent: Vec::new(),
            pedestrians: Vec::new(),
            collisions: Vec::new(),
            completed: false,
            failure: Some(Error::NoPath),
            map,
            path: None,
        });
    };

    let plan = planner::to_world_trajectory(&path, scenario);
    let mut w = WorldState::new(scenario, plan);
    let mut times = alloc::vec![0.0];
    let mut agent = alloc::vec![w.agent_position];
    let mut peds: Vec<Vec<Vec2>> = w.pedestrians.iter().map(|p| alloc::vec![p.position]).collect();
    let steps = libm::ceil(cfg.time_cap / cfg.dt) as usize;
    for k in 1..=steps {
        step_world(&mut w, cfg.dt, mode, cfg);
        // keep the time axis free of accumulated rounding
        w.t = k as f64 * cfg.dt;
        times.push(w.t);
        agent.push(w.agent_position);
        for (trace, p) in peds.iter_mut().zip(&w.pedestrians) {
            trace.push(p.position);
        }
        if w.agent_done && w.pedestrians.iter().all(|p| p.arrived) {
            break;
        }
    }

    let completed = w.agent_done && w.agent_position.distance(scenario.target) <= scenario.nav_tolerance;
    let pedestrians = w
        .pedestrians
        .iter()
        .zip(peds)
        .map(|(p, points)| PedestrianTrace { id: p.id, points, elongation: p.elongation(), cooperated: p.cooperated })
        .collect();
    Ok(SimulationResult {
        mode,
        times,
        agent,
        pedestrians,
        collisions: w.collisions,
        completed,
        failure: (!completed).then_some(Error::IncompleteRun),
        map,
        path: Some(path),
    })
}
