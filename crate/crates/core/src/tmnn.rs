//! Trajectory-modeling network: three recurrently coupled linear units per
//! axis that learn to extrapolate quadratic motion.
//!
//! The state is the momentum vector `(x, v, a)`. Learning adjusts the 3×3
//! coupling matrix with
//!
//! ```text
//! W ← W (I − ε ξ(k−1) ξ(k−1)ᵀ) + ε ξ(k) ξ(k−1)ᵀ
//! ```
//!
//! and prediction iterates `η(k) = Wᵏ ξ(0)`. For uniformly accelerated motion
//! sampled every `h` the exact map is the discrete integrator
//! `[[1, h, h²/2], [0, 1, h], [0, 0, 1]]`.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Position, velocity and acceleration along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentumVector {
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

impl MomentumVector {
    pub const ZERO: MomentumVector = MomentumVector { x: 0.0, v: 0.0, a: 0.0 };

    pub const fn new(x: f64, v: f64, a: f64) -> Self {
        MomentumVector { x, v, a }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.v, self.a]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        MomentumVector::new(a[0], a[1], a[2])
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.x * self.x + self.v * self.v + self.a * self.a)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.a.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix(pub [[f64; 3]; 3]);

impl Default for CouplingMatrix {
    fn default() -> Self {
        CouplingMatrix::identity()
    }
}

impl CouplingMatrix {
    pub const fn zero() -> Self {
        CouplingMatrix([[0.0; 3]; 3])
    }

    pub const fn identity() -> Self {
        CouplingMatrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// Exact one-step map for uniformly accelerated motion with step `h`.
    pub fn integrator(h: f64) -> Self {
        CouplingMatrix([[1.0, h, 0.5 * h * h], [0.0, 1.0, h], [0.0, 0.0, 1.0]])
    }

    pub fn apply(&self, xi: MomentumVector) -> MomentumVector {
        let v = xi.to_array();
        let w = &self.0;
        MomentumVector::from_array(core::array::from_fn(|r| w[r][0] * v[0] + w[r][1] * v[1] + w[r][2] * v[2]))
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Max-norm distance between two matrices.
    pub fn max_abs_diff(&self, other: &CouplingMatrix) -> f64 {
        let mut m = 0.0f64;
        for r in 0..3 {
            for c in 0..3 {
                m = m.max((self.0[r][c] - other.0[r][c]).abs());
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl fmt::Display for CouplingMatrix {
    /// One row per line, space separated, full round-trip precision.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.0 {
            writeln!(f, "{:e} {:e} {:e}", row[0], row[1], row[2])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TmnnParams {
    pub learning_rate: f64,
    /// Input magnitude above which the network is input-driven.
    pub tolerance: f64,
    /// Training aborts once any coupling exceeds this in magnitude.
    pub divergence_bound: f64,
}

impl Default for TmnnParams {
    fn default() -> Self {
        TmnnParams { learning_rate: 1e-2, tolerance: 1e-6, divergence_bound: 1e6 }
    }
}

/// Recovers per-axis momenta from positions sampled at `-2h`, `-h` and `0`
/// with second-order backward differences; exact for quadratic motion.
pub fn estimate_momenta(p_minus2: Vec2, p_minus1: Vec2, p0: Vec2, h: f64) -> (MomentumVector, MomentumVector) {
    let axis = |m2: f64, m1: f64, z: f64| {
        MomentumVector::new(z, (3.0 * z - 4.0 * m1 + m2) / (2.0 * h), (z - 2.0 * m1 + m2) / (h * h))
    };
    (axis(p_minus2.x, p_minus1.x, p0.x), axis(p_minus2.y, p_minus1.y, p0.y))
}

/// Applies the learning rule over one contiguous momentum stream.
///
/// A sample pair only updates the couplings when both samples are
/// input-driven, i.e. their Euclidean norm exceeds the tolerance.
pub fn train<I>(w0: CouplingMatrix, stream: I, params: &TmnnParams) -> Result<CouplingMatrix>
where
    I: IntoIterator<Item = MomentumVector>,
{
    let mut w = w0;
    let eps = params.learning_rate;
    let mut prev: Option<MomentumVector> = None;
    for (k, xi) in stream.into_iter().enumerate() {
        if !xi.is_finite() {
            return Err(Error::invalid("non-finite training sample"));
        }
        if let Some(p) = prev {
            if p.norm() > params.tolerance && xi.norm() > params.tolerance {
                // W += ε (ξ(k) − W ξ(k−1)) ξ(k−1)ᵀ, the same update written as an error correction
                let err = xi.to_array();
                let pred = w.apply(p).to_array();
                let pv = p.to_array();
                for r in 0..3 {
                    let e = err[r] - pred[r];
                    for c in 0..3 {
                        w.0[r][c] += eps * e * pv[c];
                    }
                }
                let norm = w.max_abs();
                if !(norm <= params.divergence_bound) {
                    return Err(Error::LearningDiverged { step: k, norm });
                }
            }
        }
        prev = Some(xi);
    }
    Ok(w)
}

/// Trains on several independent streams, one after another; the learning
/// rule never pairs samples across stream boundaries.
pub fn train_on<'a, I>(w0: CouplingMatrix, streams: I, params: &TmnnParams) -> Result<CouplingMatrix>
where
    I: IntoIterator<Item = &'a [MomentumVector]>,
{
    let mut w = w0;
    for s in streams {
        w = train(w, s.iter().copied(), params)?;
    }
    Ok(w)
}

/// Positions `(Wᵏ ξ0).x` for `k = 1..=steps`.
pub fn predict(w: &CouplingMatrix, xi0: MomentumVector, steps: usize) -> Vec<f64> {
    let mut eta = xi0;
    (0..steps)
        .map(|_| {
            eta = w.apply(eta);
            eta.x
        })
        .collect()
}

/// The network as a dynamical system: input-driven while an input above the
/// tolerance is present, autonomous (`η ← Wη`) otherwise.
#[derive(Debug, Clone)]
pub struct Tmnn {
    pub w: CouplingMatrix,
    pub tolerance: f64,
    eta: MomentumVector,
}

impl Tmnn {
    pub fn new(w: CouplingMatrix, tolerance: f64) -> Self {
        Tmnn { w, tolerance, eta: MomentumVector::ZERO }
    }

    pub fn output(&self) -> MomentumVector {
        self.eta
    }

    pub fn advance(&mut self, input: MomentumVector) -> MomentumVector {
        self.eta = if input.norm() > self.tolerance { input } else { self.w.apply(self.eta) };
        self.eta
    }
}

/// Random quadratic trajectories used to train the network.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCorpus {
    pub trajectories: usize,
    pub length: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for TrainingCorpus {
    fn default() -> Self {
        TrainingCorpus { trajectories: 400, length: 20, step: 0.1, seed: 0x7a3d }
    }
}

impl TrainingCorpus {
    /// Momentum streams sampled from closed-form quadratics with initial
    /// momenta uniform in `[-1, 1]³`.
    pub fn streams(&self) -> Vec<Vec<MomentumVector>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let h = self.step;
        (0..self.trajectories)
            .map(|_| {
                let x0 = rng.random_range(-1.0..=1.0);
                let v0 = rng.random_range(-1.0..=1.0);
                let a0 = rng.random_range(-1.0..=1.0);
                (0..self.length)
                    .map(|k| {
                        let t = k as f64 * h;
                        MomentumVector::new(x0 + v0 * t + 0.5 * a0 * t * t, v0 + a0 * t, a0)
                    })
                    .collect()
            })
            .collect()
    }

    pub fn train(&self, w0: CouplingMatrix, params: &TmnnParams) -> Result<CouplingMatrix> {
        let streams = self.streams();
        train_on(w0, streams.iter().map(|s| s.as_slice()), params)
    }
}

/// Trained per-axis predictors for 2D motion sampled every `step` seconds.
#[derive(Debug, Clone)]
pub struct TrajectoryPredictor {
    pub wx: CouplingMatrix,
    pub wy: CouplingMatrix,
    pub step: f64,
}

impl TrajectoryPredictor {
    /// Trains both axes on the default corpus at the given step. The two
    /// networks see independent corpora.
    pub fn trained(step: f64, params: &TmnnParams) -> Result<Self> {
        if !(step > 0.0) {
            return Err(Error::invalid("prediction step must be positive"));
        }
        let base = TrainingCorpus { step, ..TrainingCorpus::default() };
        let wx = base.train(CouplingMatrix::identity(), params)?;
        let wy = TrainingCorpus { seed: base.seed ^ 0x5eed, ..base }.train(CouplingMatrix::identity(), params)?;
        Ok(TrajectoryPredictor { wx, wy, step })
    }

    /// Positions at `k·step` for `k = 0..=steps`, from three observations
    /// spaced `step` apart (oldest first).
    pub fn extrapolate(&self, observed: [Vec2; 3], steps: usize) -> Vec<Vec2> {
        let (mx, my) = estimate_momenta(observed[0], observed[1], observed[2], self.step);
        let xs = predict(&self.wx, mx, steps);
        let ys = predict(&self.wy, my, steps);
        let mut out = Vec::with_capacity(steps + 1);
        out.push(observed[2]);
        out.extend(xs.into_iter().zip(ys).map(|(x, y)| Vec2::new(x, y)));
        out
    }
}
