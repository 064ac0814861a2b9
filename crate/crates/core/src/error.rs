use alloc::vec::Vec;
use core::fmt;

/// Crate-wide result alias.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Which collection a zero-norm sample was found in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    /// One of the K raw samples `X_i`.
    Raw,
    /// One of the K2 block sums `Y_i`.
    BlockSum,
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleKind::Raw => f.write_str("sample"),
            SampleKind::BlockSum => f.write_str("block sum"),
        }
    }
}

/// Errors raised by the estimator, the trainer and the ensemble harness.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its valid range.
    #[error("invalid {name}: {reason}")]
    InvalidParameter {
        /// Parameter name.
        name: &'static str,
        /// Violated constraint.
        reason: &'static str,
    },
    /// Fewer samples than the operation needs.
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples {
        /// Required count.
        needed: usize,
        /// Supplied count.
        got: usize,
    },
    /// Vectors of different dimensions were mixed.
    #[error("dimension mismatch at index {index}: expected {expected}, got {got}")]
    DimensionMismatch {
        /// Offending position.
        index: usize,
        /// Expected dimension.
        expected: usize,
        /// Actual dimension.
        got: usize,
    },
    /// The logarithm of a zero magnitude was requested.
    #[error("{kind} {index} has zero norm; its logarithm is undefined")]
    ZeroNorm {
        /// Raw sample or block sum.
        kind: SampleKind,
        /// Offending position.
        index: usize,
    },
    /// The estimate of 1/α is not positive, so α is undefined.
    #[error("non-positive inverse tail index estimate {inv_alpha}; sample is not heavy-tail consistent at this scale")]
    NonPositiveInverse {
        /// The raw estimate of 1/α.
        inv_alpha: f64,
    },
    /// An iterate became non-finite.
    #[error("iterate diverged at iteration {iteration}")]
    Diverged {
        /// Iteration index (1-based, the first non-finite iterate).
        iteration: usize,
    },
    /// One or more ensemble runs failed; the ensemble is aborted.
    #[error("ensemble aborted: {}", DisplayFailures(.failures))]
    EnsembleFailed {
        /// Every failed run, in run-index order.
        failures: Vec<RunFailure>,
    },
    /// A sweep point failed.
    #[error("sweep point {axis}={value} failed: {cause}")]
    SweepPointFailed {
        /// Axis name.
        axis: &'static str,
        /// Axis value of the failing point.
        value: f64,
        /// Underlying failure.
        cause: alloc::boxed::Box<Error>,
    },
}

/// Why a single ensemble run was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    /// Index of the run within the ensemble.
    pub run: usize,
    /// Cause.
    pub cause: RunFailureCause,
}

/// Cause of a [`RunFailure`].
#[derive(Debug, Clone, PartialEq)]
pub enum RunFailureCause {
    /// The iterate became non-finite at the given iteration.
    Diverged {
        /// Iteration index.
        iteration: usize,
    },
    /// Final recovery error above the convergence gate.
    NotConverged {
        /// Final error.
        error: f64,
        /// Gate in force.
        gate: f64,
    },
    /// Classification error trace did not saturate.
    NotSaturated {
        /// Relative change between the last two tail windows.
        relative_change: f64,
        /// Allowed relative change.
        gate: f64,
    },
}

impl fmt::Display for RunFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.cause {
            RunFailureCause::Diverged { iteration } => {
                write!(f, "run {} diverged at iteration {}", self.run, iteration)
            }
            RunFailureCause::NotConverged { error, gate } => write!(
                f,
                "run {} final recovery error {:e} above gate {:e}",
                self.run, error, gate
            ),
            RunFailureCause::NotSaturated {
                relative_change,
                gate,
            } => write!(
                f,
                "run {} classification error still moving ({:.3} relative change, gate {})",
                self.run, relative_change, gate
            ),
        }
    }
}

struct DisplayFailures<'a>(&'a [RunFailure]);

impl fmt::Display for DisplayFailures<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 5;
        for (i, failure) in self.0.iter().take(SHOWN).enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{failure}")?;
        }
        if self.0.len() > SHOWN {
            write!(f, "; and {} more", self.0.len() - SHOWN)?;
        }
        Ok(())
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: &'static str) -> Self {
        Error::InvalidParameter { name, reason }
    }
}
