//! Every tunable of a run in one table, settable with `--set key=value` and
//! echoed to a sidecar file.

use std::fmt::Write as _;

use ccmap_core::generate::{DoorSegment, ScenarioTemplate};
use ccmap_core::lattice::LatticeParams;
use ccmap_core::metrics::DEFAULT_CRITICAL_DISTANCE;
use ccmap_core::planner::{Calibration, PlannerConfig, DEFAULT_FOOTPRINT_MARGIN};
use ccmap_core::sim::SimConfig;
use ccmap_core::social::HumanModel;
use ccmap_core::tmnn::TmnnParams;

use crate::error::ConfigError;

/// Which door segment each ensemble run aims at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Targeting {
    Segment(DoorSegment),
    /// Left extreme on even seeds, right extreme on odd ones.
    Extremes,
}

impl Targeting {
    pub fn segment(self, seed: u64) -> DoorSegment {
        match self {
            Targeting::Segment(s) => s,
            Targeting::Extremes if seed % 2 == 0 => DoorSegment::LeftExtreme,
            Targeting::Extremes => DoorSegment::RightExtreme,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Targeting::Segment(s) => s.as_str(),
            Targeting::Extremes => "extremes",
        }
    }

    fn parse(v: &str) -> Option<Self> {
        match v {
            "extremes" => Some(Targeting::Extremes),
            _ => v.parse().ok().map(Targeting::Segment),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub lattice: LatticeParams,
    pub tmnn: TmnnParams,
    pub human: HumanModel,
    pub descent_step: f64,
    pub target_radius: f64,
    pub footprint_margin: f64,
    pub sim: SimConfig,
    pub critical_distance: f64,
    /// Lattice sizes the calibrate command measures on.
    pub calibration_sizes: Vec<usize>,
    pub targeting: Targeting,
    /// Template overrides, applied in order on top of the family defaults.
    pub template: Vec<(String, String)>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            lattice: LatticeParams::default(),
            tmnn: TmnnParams::default(),
            human: HumanModel::default(),
            descent_step: 0.5,
            target_radius: 0.1,
            footprint_margin: DEFAULT_FOOTPRINT_MARGIN,
            sim: SimConfig::default(),
            critical_distance: DEFAULT_CRITICAL_DISTANCE,
            calibration_sizes: vec![80, 120],
            targeting: Targeting::Segment(DoorSegment::Center),
            template: Vec::new(),
        }
    }
}

/// Keys accepted by [`Params::set`], with what they control.
pub const KEYS: &[(&str, &str)] = &[
    ("lattice.coupling", "diffusive coupling d"),
    ("lattice.recovery_rate", "recovery rate epsilon"),
    ("lattice.dt", "Euler substep, mental time units"),
    ("lattice.substeps", "substeps per mental step"),
    ("lattice.agent_potential", "clamped potential of the agent cell"),
    ("lattice.band_lo", "lower edge of the accretion band"),
    ("lattice.band_hi", "upper edge of the accretion band"),
    ("lattice.arrival_threshold", "potential that marks arrival"),
    ("lattice.max_mental_steps", "hard cap on mental steps"),
    ("lattice.patience", "mental steps without a new arrival before stopping"),
    ("lattice.blowup_bound", "|r| that aborts integration"),
    ("tmnn.learning_rate", "predictor learning rate"),
    ("tmnn.tolerance", "input magnitude that switches to input-driven"),
    ("tmnn.divergence_bound", "coupling magnitude that aborts training"),
    ("human.crossing_angle_deg", "half-width of the cooperation cone, degrees"),
    ("human.lateral_gain", "lateral speed over walking speed"),
    ("planner.descent_step", "descent step, cells"),
    ("planner.target_radius", "target disc radius, meters"),
    ("planner.footprint_margin", "extra pedestrian footprint radius, meters"),
    ("sim.dt", "execution step, seconds"),
    ("sim.time_cap", "execution time limit, seconds"),
    ("sim.reaim", "pedestrians turn back to their goal after cooperating"),
    ("metrics.critical_distance", "d_crt of the safety measure, meters"),
    ("calibration.sizes", "lattice sizes for the calibrate command, comma separated"),
    ("target", "door segment: center, left_extreme, right_extreme or extremes"),
    ("template.pedestrians", "crowd size"),
    ("template.corridor_width", "meters"),
    ("template.door_center", "lateral door position, meters"),
    ("template.door_width", "meters"),
    ("template.speed_near", "walking speed next to the door, m/s"),
    ("template.speed_far", "walking speed far from the door, m/s"),
    ("template.speed_jitter", "half-width of speed jitter, m/s"),
    ("template.lateral_jitter", "half-width of lateral jitter, meters"),
    ("template.fan", "growth of the flow half-extent per meter from the door"),
    ("template.spacing", "line-up spacing, meters"),
    ("template.spawn_near", "spawn region edge far from the door, x in meters"),
    ("template.spawn_far", "spawn region edge next to the door, x in meters"),
    ("template.personal_radius", "meters"),
    ("template.reaction_distance", "meters"),
    ("template.retries", "layout redraws before giving up"),
];

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::Invalid(format!("bad value `{value}` for `{key}`"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| bad(key, value))
}

impl Params {
    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let (key, value) = (key.trim(), value.trim());
        let l = &mut self.lattice;
        match key {
            "lattice.coupling" => l.coupling = num(key, value)?,
            "lattice.recovery_rate" => l.recovery_rate = num(key, value)?,
            "lattice.dt" => l.dt = num(key, value)?,
            "lattice.substeps" => l.substeps_per_mental_step = num(key, value)?,
            "lattice.agent_potential" => l.agent_potential = num(key, value)?,
            "lattice.band_lo" => l.front_band.0 = num(key, value)?,
            "lattice.band_hi" => l.front_band.1 = num(key, value)?,
            "lattice.arrival_threshold" => l.arrival_threshold = num(key, value)?,
            "lattice.max_mental_steps" => l.max_mental_steps = num(key, value)?,
            "lattice.patience" => l.patience = num(key, value)?,
            "lattice.blowup_bound" => l.blowup_bound = num(key, value)?,
            "tmnn.learning_rate" => self.tmnn.learning_rate = num(key, value)?,
            "tmnn.tolerance" => self.tmnn.tolerance = num(key, value)?,
            "tmnn.divergence_bound" => self.tmnn.divergence_bound = num(key, value)?,
            "human.crossing_angle_deg" => self.human.crossing_angle_deg = num(key, value)?,
            "human.lateral_gain" => self.human.lateral_gain = num(key, value)?,
            "planner.descent_step" => self.descent_step = num(key, value)?,
            "planner.target_radius" => self.target_radius = num(key, value)?,
            "planner.footprint_margin" => self.footprint_margin = num(key, value)?,
            "sim.dt" => self.sim.dt = num(key, value)?,
            "sim.time_cap" => self.sim.time_cap = num(key, value)?,
            "sim.reaim" => self.sim.reaim_after_cooperation = num(key, value)?,
            "metrics.critical_distance" => self.critical_distance = num(key, value)?,
            "calibration.sizes" => {
                self.calibration_sizes = value.split(',').map(|v| num(key, v.trim())).collect::<Result<_, _>>()?;
                if self.calibration_sizes.is_empty() {
                    return Err(bad(key, value));
                }
            }
            "target" => self.targeting = Targeting::parse(value).ok_or_else(|| bad(key, value))?,
            _ if key.starts_with("template.") && KEYS.iter().any(|(k, _)| *k == key) => {
                // checked against a scratch template so typos fail early
                let mut t = ScenarioTemplate::new(ccmap_core::generate::Family::ClutteredFlow);
                apply_template_key(&mut t, key, value)?;
                self.template.push((key.to_string(), value.to_string()));
            }
            _ => return Err(ConfigError::Invalid(format!("unknown parameter `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` string as given on the command line.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("override `{pair}` is not of the form key=value")))?;
        self.set(k, v)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: ccmap_core::Error| ConfigError::Invalid(e.to_string());
        self.lattice.validate().map_err(invalid)?;
        let ok = self.descent_step > 0.0
            && self.descent_step <= 1.0
            && self.target_radius >= 0.0
            && self.footprint_margin >= 0.0
            && self.sim.dt > 0.0
            && self.sim.time_cap > 0.0
            && self.critical_distance >= 0.0
            && self.calibration_sizes.iter().all(|&n| n >= 24);
        if ok {
            Ok(())
        } else {
            Err(ConfigError::Invalid("parameters out of range".into()))
        }
    }

    /// Planner configuration around an already measured front speed.
    pub fn planner(&self, calibration: Calibration) -> PlannerConfig {
        PlannerConfig {
            lattice: self.lattice.clone(),
            tmnn: self.tmnn.clone(),
            human: self.human,
            calibration,
            descent_step: self.descent_step,
            target_radius: self.target_radius,
            footprint_margin: self.footprint_margin,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig { human: self.human, ..self.sim.clone() }
    }

    /// The family defaults with the template overrides applied.
    pub fn template(&self, family: ccmap_core::generate::Family) -> Result<ScenarioTemplate, ConfigError> {
        let mut t = ScenarioTemplate::new(family);
        for (k, v) in &self.template {
            apply_template_key(&mut t, k, v)?;
        }
        Ok(t)
    }

    /// Effective values as `key = value` lines in [`KEYS`] order. Template
    /// keys are only listed when a template is in use.
    pub fn sidecar(&self, template: Option<&ScenarioTemplate>) -> String {
        let mut out = String::new();
        for (key, doc) in KEYS {
            let value = match self.value(key, template) {
                Some(v) => v,
                None => continue,
            };
            let _ = writeln!(out, "{key} = {value}  # {doc}");
        }
        out
    }

    fn value(&self, key: &str, t: Option<&ScenarioTemplate>) -> Option<String> {
        let l = &self.lattice;
        let v = match key {
            "lattice.coupling" => l.coupling.to_string(),
            "lattice.recovery_rate" => l.recovery_rate.to_string(),
            "lattice.dt" => l.dt.to_string(),
            "lattice.substeps" => l.substeps_per_mental_step.to_string(),
            "lattice.agent_potential" => l.agent_potential.to_string(),
            "lattice.band_lo" => l.front_band.0.to_string(),
            "lattice.band_hi" => l.front_band.1.to_string(),
            "lattice.arrival_threshold" => l.arrival_threshold.to_string(),
            "lattice.max_mental_steps" => l.max_mental_steps.to_string(),
            "lattice.patience" => l.patience.to_string(),
            "lattice.blowup_bound" => l.blowup_bound.to_string(),
            "tmnn.learning_rate" => self.tmnn.learning_rate.to_string(),
            "tmnn.tolerance" => self.tmnn.tolerance.to_string(),
            "tmnn.divergence_bound" => self.tmnn.divergence_bound.to_string(),
            "human.crossing_angle_deg" => self.human.crossing_angle_deg.to_string(),
            "human.lateral_gain" => self.human.lateral_gain.to_string(),
            "planner.descent_step" => self.descent_step.to_string(),
            "planner.target_radius" => self.target_radius.to_string(),
            "planner.footprint_margin" => self.footprint_margin.to_string(),
            "sim.dt" => self.sim.dt.to_string(),
            "sim.time_cap" => self.sim.time_cap.to_string(),
            "sim.reaim" => self.sim.reaim_after_cooperation.to_string(),
            "metrics.critical_distance" => self.critical_distance.to_string(),
            "calibration.sizes" => self.calibration_sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
            "target" => self.targeting.as_str().to_string(),
            _ => return t.and_then(|t| template_value(t, key)),
        };
        Some(v)
    }
}

fn apply_template_key(t: &mut ScenarioTemplate, key: &str, value: &str) -> Result<(), ConfigError> {
    match key {
        "template.pedestrians" => t.pedestrians = num(key, value)?,
        "template.corridor_width" => t.corridor_width = num(key, value)?,
        "template.door_center" => t.door_center = num(key, value)?,
        "template.door_width" => t.door_width = num(key, value)?,
        "template.speed_near" => t.speed_near = num(key, value)?,
        "template.speed_far" => t.speed_far = num(key, value)?,
        "template.speed_jitter" => t.speed_jitter = num(key, value)?,
        "template.lateral_jitter" => t.lateral_jitter = num(key, value)?,
        "template.fan" => t.fan = num(key, value)?,
        "template.spacing" => t.spacing = num(key, value)?,
        "template.spawn_near" => t.spawn_x.0 = num(key, value)?,
        "template.spawn_far" => t.spawn_x.1 = num(key, value)?,
        "template.personal_radius" => t.personal_radius = num(key, value)?,
        "template.reaction_distance" => t.reaction_distance = num(key, value)?,
        "template.retries" => t.retries = num(key, value)?,
        _ => return Err(ConfigError::Invalid(format!("unknown parameter `{key}`"))),
    }
    Ok(())
}

fn template_value(t: &ScenarioTemplate, key: &str) -> Option<String> {
    let v = match key {
        "template.pedestrians" => t.pedestrians.to_string(),
        "template.corridor_width" => t.corridor_width.to_string(),
        "template.door_center" => t.door_center.to_string(),
        "template.door_width" => t.door_width.to_string(),
        "template.speed_near" => t.speed_near.to_string(),
        "template.speed_far" => t.speed_far.to_string(),
        "template.speed_jitter" => t.speed_jitter.to_string(),
        "template.lateral_jitter" => t.lateral_jitter.to_string(),
        "template.fan" => t.fan.to_string(),
        "template.spacing" => t.spacing.to_string(),
        "template.spawn_near" => t.spawn_x.0.to_string(),
        "template.spawn_far" => t.spawn_x.1.to_string(),
        "template.personal_radius" => t.personal_radius.to_string(),
        "template.reaction_distance" => t.reaction_distance.to_string(),
        "template.retries" => t.retries.to_string(),
        _ => return None,
    };
    Some(v)
}
