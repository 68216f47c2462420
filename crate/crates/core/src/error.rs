use alloc::string::String;
use core::fmt;

/// Errors raised by the map-building, planning and evaluation pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A world point lies outside the arena.
    OutOfArena { x: f64, y: f64 },
    /// A lattice index is outside `1..=n`.
    BadIndex { i: usize, j: usize, n: usize },
    /// Coupling matrix norm exceeded the configured bound during training.
    LearningDiverged { step: usize, norm: f64 },
    /// Membrane potential blew up; the integration substep is too large.
    UnstableIntegration { step: usize, max_abs: f64 },
    /// The agent cell sits inside an obstacle footprint at mental time zero.
    InvalidStart,
    /// The target cannot be reached on the map.
    NoPath,
    /// The human is standing still, so there is no visual axis to measure against.
    NoVisualAxis,
    /// A zero velocity was given where a heading is required.
    DegenerateVelocity,
    /// The trajectory does not end within the navigation tolerance of the target.
    IncompleteRun,
    /// A trajectory with no vertices.
    EmptyTrajectory,
    /// Fewer samples than a statistic needs.
    InsufficientSamples { needed: usize, got: usize },
    /// A scenario template could not produce a non-overlapping crowd.
    TemplateInfeasible { retries: usize },
    /// A scenario or parameter set violates one of its invariants.
    Invalid(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Numerical failures as opposed to configuration or planning outcomes.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::LearningDiverged { .. } | Error::UnstableIntegration { .. })
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::OutOfArena { x, y } => write!(f, "point ({x}, {y}) is outside the arena"),
            Error::BadIndex { i, j, n } => {
                write!(f, "lattice index ({i}, {j}) is outside 1..={n}")
            }
            Error::LearningDiverged { step, norm } => {
                write!(f, "coupling matrix diverged at sample {step} (norm {norm:.3e}); learning rate too large")
            }
            Error::UnstableIntegration { step, max_abs } => write!(
                f,
                "lattice integration unstable at mental step {step} (max |r| = {max_abs:.3e}); substep too large"
            ),
            Error::InvalidStart => write!(f, "agent starts inside an obstacle footprint"),
            Error::NoPath => write!(f, "target is unreachable"),
            Error::NoVisualAxis => write!(f, "human has zero velocity"),
            Error::DegenerateVelocity => write!(f, "velocity must be non-zero"),
            Error::IncompleteRun => write!(f, "trajectory does not reach the target"),
            Error::EmptyTrajectory => write!(f, "trajectory has no vertices"),
            Error::InsufficientSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            Error::TemplateInfeasible { retries } => {
                write!(f, "template infeasible after {retries} retries")
            }
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
