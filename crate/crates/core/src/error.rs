//! Crate-wide error type and result alias.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong across the library.
///
/// Variants are grouped by flavor: construction/validation problems
/// (`InvalidSchedule` through `NonMonotoneTimes`), numerical failures
/// (`NonFiniteState` through `NumericalUnderflow`), evaluation-grid issues
/// (`CoverageError`, `GridMismatch`), and I/O or parsing problems.
#[derive(Debug, Error)]
pub enum Error {
    /// A step-size/iteration schedule violates its invariants.
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    /// Mismatched particle counts or dimensions between containers.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// Observation/anchor times are not strictly increasing (or negative).
    #[error("times must be non-negative and strictly increasing: {0}")]
    NonMonotoneTimes(String),
    /// A point carries a NaN or infinite coordinate.
    #[error("non-finite coordinate in {0}")]
    NonFiniteCoordinate(String),
    /// A simulation or sampler state left the representable range
    /// (usually a signal that a step size is too large for the drift).
    #[error("non-finite state: {0}")]
    NonFiniteState(String),
    /// The transport solver did not reach the requested marginal residual.
    #[error(
        "transport solver did not converge after {iterations} iterations \
         (marginal residual {residual:.3e}); epsilon may be too small for the \
         atom spread, or max_iter too low"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    /// Dual potentials are too inaccurate for the requested use.
    #[error(
        "stale potentials: marginal residual {residual:.3e} exceeds 10x the \
         solve tolerance {tol:.3e}"
    )]
    StalePotentials { residual: f64, tol: f64 },
    /// Too many coincident points for a particle-based estimator.
    #[error("degenerate cloud: {0}")]
    DegenerateCloud(String),
    /// A probability mass cell fell below the representable floor.
    #[error("numerical underflow: {0}")]
    NumericalUnderflow(String),
    /// A grid density does not integrate close enough to one.
    #[error("grid covers mass {mass:.6}, outside the 2% tolerance around 1 (box too small?)")]
    CoverageError { mass: f64 },
    /// Two grid densities live on different lattices.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// Not enough data for the requested fit or estimate.
    #[error("insufficient points: {0}")]
    InsufficientPoints(String),
    /// A query time outside the reconstructable window.
    #[error("time {t} outside the reconstructable range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Malformed on-disk data.
    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad inputs,
    /// malformed files, or misconfiguration). The command-line tool maps
    /// these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteState(_)
                | Error::NoConvergence { .. }
                | Error::StalePotentials { .. }
                | Error::DegenerateCloud(_)
                | Error::NumericalUnderflow(_)
                | Error::CoverageError { .. }
        )
    }
}
