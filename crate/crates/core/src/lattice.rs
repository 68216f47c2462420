//! Excitable lattice that explores the arena with a wavefront.
//!
//! Every cell is a FitzHugh-Nagumo unit
//!
//! ```text
//! dr/dτ = q (f(r) - z + d Δr),    dz/dτ = ε (r - 7z - 2),
//! f(r)  = (-r³ + 4r² - 2r - 2) / 7
//! ```
//!
//! with a 4-neighbor Laplacian and no-flux borders. The agent cell is clamped
//! at a high potential and launches a switching front. Occupied cells that
//! the front reaches while their potential sits inside the detection band
//! freeze (`q = 0`) and become effective objects; the front slips around
//! them. The time at which each free cell crosses the arrival threshold is
//! the arrival field `c`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::GridMapping;

/// Sentinel for cells the front has not reached.
pub const UNSET: f64 = f64::INFINITY;

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeParams {
    /// Diffusive coupling `d`.
    pub coupling: f64,
    /// Recovery rate `ε`.
    pub recovery_rate: f64,
    /// Explicit Euler substep in mental time units.
    pub dt: f64,
    pub substeps_per_mental_step: usize,
    /// Clamped potential of the agent cell.
    pub agent_potential: f64,
    /// Inclusive detection band for accretion.
    pub front_band: (f64, f64),
    /// Arrival threshold.
    pub arrival_threshold: f64,
    pub max_mental_steps: usize,
    /// Stop after this many mental steps without a new arrival.
    pub patience: usize,
    /// `|r|` above this aborts with [`Error::UnstableIntegration`].
    pub blowup_bound: f64,
}

impl Default for LatticeParams {
    fn default() -> Self {
        LatticeParams {
            coupling: 0.2,
            recovery_rate: 0.04,
            dt: 0.05,
            substeps_per_mental_step: 2,
            agent_potential: 5.0,
            front_band: (1.0, 2.0),
            arrival_threshold: 1.5,
            max_mental_steps: 40_000,
            patience: 400,
            blowup_bound: 50.0,
        }
    }
}

impl LatticeParams {
    /// Duration of one mental step in mental time units.
    pub fn mental_step(&self) -> f64 {
        self.dt * self.substeps_per_mental_step as f64
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.dt.is_finite()
            && self.substeps_per_mental_step > 0
            && self.coupling >= 0.0
            && self.recovery_rate >= 0.0
            && self.front_band.0 <= self.front_band.1
            && self.arrival_threshold >= self.front_band.0
            && self.max_mental_steps > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("lattice parameters out of range"))
        }
    }
}

/// Cubic nonlinearity of the lattice units.
pub fn cubic(r: f64) -> f64 {
    (-r * r * r + 4.0 * r * r - 2.0 * r - 2.0) / 7.0
}

/// Growing set of effective-object cells with the mental step each joined at.
///
/// Equality compares membership and joining steps, not insertion order.
#[derive(Debug, Clone, Default)]
pub struct EffectiveObjectSet {
    joined: Vec<u32>,
    members: Vec<usize>,
}

const NOT_MEMBER: u32 = u32::MAX;

impl PartialEq for EffectiveObjectSet {
    fn eq(&self, other: &Self) -> bool {
        self.joined == other.joined
    }
}

impl Eq for EffectiveObjectSet {}

impl EffectiveObjectSet {
    pub fn new(cells: usize) -> Self {
        EffectiveObjectSet { joined: vec![NOT_MEMBER; cells], members: Vec::new() }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.joined[k] != NOT_MEMBER
    }

    /// Mental step at which the cell joined.
    pub fn joined_at(&self, k: usize) -> Option<usize> {
        let s = self.joined[k];
        (s != NOT_MEMBER).then_some(s as usize)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members in joining order.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn is_subset_of(&self, other: &EffectiveObjectSet) -> bool {
        self.members.iter().all(|&k| other.contains(k))
    }

    fn insert(&mut self, k: usize, step: usize) -> bool {
        if self.contains(k) {
            return false;
        }
        self.joined[k] = step as u32;
        self.members.push(k);
        true
    }
}

/// Source of the occupied cell set `B(k)` at each mental step.
///
/// The stream sees the lattice state before the step is integrated, which
/// lets cooperative humans react to where the front currently is.
pub trait OccupancyStream {
    fn occupied(&mut self, step: usize, state: &LatticeState, out: &mut Vec<usize>);
}

/// No occupancy at all.
pub struct EmptyStream;

impl OccupancyStream for EmptyStream {
    fn occupied(&mut self, _step: usize, _state: &LatticeState, _out: &mut Vec<usize>) {}
}

/// The same cell set at every step.
pub struct StaticStream(pub Vec<usize>);

impl OccupancyStream for StaticStream {
    fn occupied(&mut self, _step: usize, _state: &LatticeState, out: &mut Vec<usize>) {
        out.extend_from_slice(&self.0);
    }
}

impl<F> OccupancyStream for F
where
    F: FnMut(usize, &LatticeState, &mut Vec<usize>),
{
    fn occupied(&mut self, step: usize, state: &LatticeState, out: &mut Vec<usize>) {
        self(step, state, out)
    }
}

#[derive(Debug, Clone)]
pub struct LatticeState {
    n: usize,
    r: Vec<f64>,
    z: Vec<f64>,
    gate: Vec<bool>,
    arrival: Vec<f64>,
    step: usize,
    omega: EffectiveObjectSet,
    agent: usize,
    // scratch for the Euler update
    next_r: Vec<f64>,
}

impl LatticeState {
    /// All cells at rest (`r = z = 0`) except the agent cell, clamped at
    /// `params.agent_potential` with no dynamics.
    pub fn new(n: usize, agent: usize, params: &LatticeParams) -> Result<Self> {
        let len = n * n;
        if agent >= len {
            return Err(Error::invalid("agent cell outside lattice"));
        }
        let mut r = vec![0.0; len];
        let mut gate = vec![true; len];
        let mut arrival = vec![UNSET; len];
        r[agent] = params.agent_potential;
        gate[agent] = false;
        arrival[agent] = 0.0;
        Ok(LatticeState {
            n,
            r,
            z: vec![0.0; len],
            gate,
            arrival,
            step: 0,
            omega: EffectiveObjectSet::new(len),
            agent,
            next_r: vec![0.0; len],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Completed mental steps.
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn agent(&self) -> usize {
        self.agent
    }

    pub fn potential(&self) -> &[f64] {
        &self.r
    }

    pub fn recovery(&self) -> &[f64] {
        &self.z
    }

    pub fn gate(&self) -> &[bool] {
        &self.gate
    }

    pub fn arrival(&self) -> &[f64] {
        &self.arrival
    }

    pub fn effective_objects(&self) -> &EffectiveObjectSet {
        &self.omega
    }

    pub fn max_abs_potential(&self) -> f64 {
        self.r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Whether a cell's potential lies inside the detection band.
    pub fn in_band(&self, k: usize, params: &LatticeParams) -> bool {
        let r = self.r[k];
        r >= params.front_band.0 && r <= params.front_band.1
    }

    /// Ω after adding the occupied cells whose potential lies in the band.
    /// Pure: the state is not modified.
    pub fn accrete_effective_objects(&self, occupied: &[usize], params: &LatticeParams) -> EffectiveObjectSet {
        let mut omega = self.omega.clone();
        for &k in occupied {
            if k != self.agent && self.in_band(k, params) {
                omega.insert(k, self.step + 1);
            }
        }
        omega
    }

    fn accrete_in_place(&mut self, occupied: &[usize], params: &LatticeParams) {
        for &k in occupied {
            if k != self.agent && self.in_band(k, params) && self.omega.insert(k, self.step + 1) {
                self.gate[k] = false;
            }
        }
    }

    /// Advances one mental step: accrete, integrate, record arrivals.
    /// Returns the number of new arrivals.
    pub fn integrate_mental_step(&mut self, occupied: &[usize], params: &LatticeParams) -> Result<usize> {
        self.accrete_in_place(occupied, params);

        let start = self.r.clone();
        for _ in 0..params.substeps_per_mental_step {
            self.euler_substep(params);
        }
        self.step += 1;

        let max_abs = self.max_abs_potential();
        if !(max_abs <= params.blowup_bound) {
            return Err(Error::UnstableIntegration { step: self.step, max_abs });
        }

        let h = params.mental_step();
        let th = params.arrival_threshold;
        let t_end = self.step as f64 * h;
        let mut arrivals = 0;
        for k in 0..self.r.len() {
            if self.arrival[k] != UNSET || !self.gate[k] {
                continue;
            }
            let (r0, r1) = (start[k], self.r[k]);
            if r0 < th && r1 >= th {
                // linear interpolation of the crossing inside the step
                let frac = (th - r0) / (r1 - r0);
                self.arrival[k] = t_end - h + frac * h;
                arrivals += 1;
            }
        }
        Ok(arrivals)
    }

    fn euler_substep(&mut self, p: &LatticeParams) {
        let n = self.n;
        let dt = p.dt;
        for b in 0..n {
            for a in 0..n {
                let k = b * n + a;
                let rk = self.r[k];
                if !self.gate[k] {
                    self.next_r[k] = rk;
                    continue;
                }
                // no-flux borders: a missing neighbor mirrors the cell itself
                let west = if a > 0 { self.r[k - 1] } else { rk };
                let east = if a + 1 < n { self.r[k + 1] } else { rk };
                let south = if b > 0 { self.r[k - n] } else { rk };
                let north = if b + 1 < n { self.r[k + n] } else { rk };
                let lap = west + east + south + north - 4.0 * rk;
                self.next_r[k] = rk + dt * (cubic(rk) - self.z[k] + p.coupling * lap);
            }
        }
        for k in 0..self.z.len() {
            let rk = self.r[k];
            self.z[k] += dt * p.recovery_rate * (rk - 7.0 * self.z[k] - 2.0);
        }
        core::mem::swap(&mut self.r, &mut self.next_r);
    }
}

/// Final product of a wave run.
#[derive(Debug, Clone)]
pub struct WaveOutcome {
    pub arrival: Vec<f64>,
    pub effective_objects: EffectiveObjectSet,
    /// Free cells with an arrival time.
    pub reachable: Vec<bool>,
    pub mental_steps: usize,
    pub agent: usize,
}

/// Runs the wave until every free cell has arrived, nothing new arrives for
/// `patience` steps, or `max_mental_steps` is hit.
///
/// Fails with [`Error::InvalidStart`] when the agent cell is occupied at step 0.
pub fn run_wave(
    mapping: &GridMapping,
    agent: usize,
    stream: &mut dyn OccupancyStream,
    params: &LatticeParams,
) -> Result<WaveOutcome> {
    params.validate()?;
    let mut state = LatticeState::new(mapping.n(), agent, params)?;
    let mut occupied = Vec::new();
    stream.occupied(0, &state, &mut occupied);
    if occupied.contains(&agent) {
        return Err(Error::InvalidStart);
    }

    let len = mapping.len();
    let mut arrived = 1usize;
    let mut idle = 0usize;
    loop {
        if state.step > 0 {
            occupied.clear();
            stream.occupied(state.step, &state, &mut occupied);
        }
        let new = state.integrate_mental_step(&occupied, params)?;
        arrived += new;
        idle = if new == 0 { idle + 1 } else { 0 };
        let settled = arrived + state.omega.len() >= len && all_free_arrived(&state);
        if settled || idle >= params.patience || state.step >= params.max_mental_steps {
            break;
        }
    }

    let reachable = (0..len).map(|k| state.arrival[k] != UNSET && !state.omega.contains(k)).collect();
    Ok(WaveOutcome {
        arrival: state.arrival,
        effective_objects: state.omega,
        reachable,
        mental_steps: state.step,
        agent,
    })
}

fn all_free_arrived(state: &LatticeState) -> bool {
    (0..state.r.len()).all(|k| state.arrival[k] != UNSET || state.omega.contains(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_equilibria() {
        // f(r) = (r - 2)/7 exactly at r = 0, 1, 3
        for r in [0.0, 1.0, 3.0] {
            assert!((cubic(r) - (r - 2.0) / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn accretion_uses_detection_band() {
        let p = LatticeParams::default();
        let mut s = LatticeState::new(4, 0, &p).unwrap();
        s.r[5] = 1.5;
        s.r[6] = 0.2;
        let omega = s.accrete_effective_objects(&[5, 6], &p);
        assert!(omega.contains(5));
        assert!(!omega.contains(6));
        // pure
        assert!(s.effective_objects().is_empty());
        assert_eq!(s.accrete_effective_objects(&[], &p), *s.effective_objects());
    }

    #[test]
    fn frozen_cells_keep_their_potential() {
        let p = LatticeParams::default();
        let mut s = LatticeState::new(6, 0, &p).unwrap();
        s.r[14] = 1.2;
        s.integrate_mental_step(&[14], &p).unwrap();
        assert!(!s.gate()[14]);
        assert_eq!(s.potential()[14], 1.2);
        assert_eq!(s.effective_objects().joined_at(14), Some(1));
        for _ in 0..20 {
            s.integrate_mental_step(&[], &p).unwrap();
        }
        assert_eq!(s.potential()[14], 1.2);
        assert_eq!(s.potential()[0], 5.0);
    }

    #[test]
    fn blowup_is_reported() {
        let p = LatticeParams { dt: 5.0, ..LatticeParams::default() };
        let mut s = LatticeState::new(8, 27, &p).unwrap();
        let mut res = Ok(0);
        for _ in 0..50 {
            res = s.integrate_mental_step(&[], &p);
            if res.is_err() {
                break;
            }
        }
        assert!(matches!(res, Err(Error::UnstableIntegration { .. })));
    }
}
