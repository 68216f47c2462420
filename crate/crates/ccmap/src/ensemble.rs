//! Seeded ensembles of template runs, fanned out with rayon.

use rayon::prelude::*;

use ccmap_core::generate::{self, Family};
use ccmap_core::lattice::LatticeParams;
use ccmap_core::metrics::{self, EnsembleStats};
use ccmap_core::planner::{Calibration, PlannerConfig};
use ccmap_core::sim::{self, SimConfig, SimulationResult};
use ccmap_core::{Mode, Scenario};

use crate::error::{ConfigError, RunError};
use crate::output::{self, MetricsRow, StatsRow};
use crate::params::Params;

/// Front speed on an empty `n`-cell lattice.
pub fn calibrate(lattice: &LatticeParams, n: usize) -> Result<Calibration, RunError> {
    Ok(Calibration::measure(lattice, n)?)
}

/// Plans and executes `scenario` once per mode.
pub fn run_modes(
    scenario: &Scenario,
    modes: &[Mode],
    planner: &PlannerConfig,
    sim_cfg: &SimConfig,
) -> Result<Vec<SimulationResult>, RunError> {
    modes.iter().map(|&m| Ok(sim::simulate(scenario, m, planner, sim_cfg)?)).collect()
}

/// Scene of ensemble run `run`.
pub fn ensemble_scenario(family: Family, params: &Params, seed: u64) -> Result<Scenario, RunError> {
    let segment = params.targeting.segment(seed);
    let t = params.template(family)?.with_seed(seed).with_segment(segment);
    generate::generate(&t).map_err(|e| match e {
        ccmap_core::Error::TemplateInfeasible { .. } | ccmap_core::Error::Invalid(_) => {
            RunError::Config(ConfigError::Invalid(e.to_string()))
        }
        e => RunError::Core(e),
    })
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    /// Run-major, modes in the order requested.
    pub rows: Vec<MetricsRow>,
    pub stats: EnsembleStats,
}

impl Ensemble {
    pub fn metrics_csv(&self, stamp: Option<&str>) -> String {
        output::csv_string(&self.rows, stamp)
    }

    pub fn stats_rows(&self) -> Vec<StatsRow> {
        output::stats_rows(&self.stats)
    }

    pub fn stats_csv(&self, stamp: Option<&str>) -> String {
        output::csv_string(&self.stats_rows(), stamp)
    }

    /// Runs that did not reach the target, per mode.
    pub fn failures(&self, mode: Mode) -> usize {
        self.rows.iter().filter(|r| r.mode == mode && !r.completed).count()
    }
}

/// Runs `runs` scenes with seeds `seed, seed + 1, …` in every mode. Results
/// come back in seed order whatever the thread count.
pub fn run_ensemble(
    family: Family,
    params: &Params,
    calibration: Calibration,
    modes: &[Mode],
    runs: usize,
    seed: u64,
) -> Result<Ensemble, RunError> {
    if runs == 0 {
        return Err(ConfigError::Invalid("ensemble size must be at least 1".into()).into());
    }
    let planner = params.planner(calibration);
    let sim_cfg = params.sim_config();
    let per_run: Vec<Result<Vec<MetricsRow>, RunError>> = (0..runs)
        .into_par_iter()
        .map(|k| {
            let s = seed + k as u64;
            let scenario = ensemble_scenario(family, params, s)?;
            let target = params.targeting.segment(s);
            let results = run_modes(&scenario, modes, &planner, &sim_cfg)?;
            Ok(results
                .iter()
                .map(|r| {
                    let rec = metrics::evaluate(
                        r,
                        scenario.agent_start,
                        scenario.target,
                        scenario.nav_tolerance,
                        params.critical_distance,
                    );
                    MetricsRow::new(k, s, target.as_str(), &rec, r)
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(runs * modes.len());
    for r in per_run {
        rows.extend(r?);
    }
    let samples =
        modes.iter().map(|&m| (m, rows.iter().filter(|r| r.mode == m).map(MetricsRow::record).collect())).collect();
    Ok(Ensemble { stats: EnsembleStats::from_records(samples), rows })
}
