//! Error taxonomy shared by every module in the crate.
//!
//! Variants are grouped by the way a driver should react to them:
//! configuration / input problems (reject the run), convergence problems
//! (partial results may still be usable) and numerical problems detected
//! mid-computation (abort the run).

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent configuration, including unknown keys,
    /// out-of-range parameters and mutually exclusive options.
    #[error("configuration error: {0}")]
    Config(String),

    /// File-system or serialization failure while reading inputs or
    /// writing reports.
    #[error("i/o error on {path}: {msg}")]
    Io { path: String, msg: String },

    /// The chart's first fundamental form is (numerically) singular at a
    /// requested point: `det g <= eps_deg * scale`.
    #[error("degenerate chart at (u, v) = ({u:.6e}, {v:.6e}): det g = {det_g:.3e}")]
    DegenerateChart { u: f64, v: f64, det_g: f64 },

    /// A field evaluation point coincides with (or is too close to) a
    /// current source, so the potential is not finite there.
    #[error("field evaluation point too close to a current source: {0}")]
    SourceOnSurface(String),

    /// Two objects that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Grid resolution below the minimum needed by the stencils.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    /// Slab half-thickness violates the thin-wall guard
    /// `eps * max|M| <= 0.2` or makes the volume factor non-positive.
    #[error("slab too thick: {0}")]
    ThickSlab(String),

    /// A vector or matrix has the wrong length / dimensions for the
    /// requested operation.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Two results were produced under incompatible settings and cannot
    /// be compared meaningfully.
    #[error("metadata mismatch: {0}")]
    MetadataMismatch(String),

    /// Iterative eigensolver exhausted its iteration budget. Carries the
    /// number of converged pairs; partial results are returned through
    /// the regular result channel with per-pair flags.
    #[error("solver not converged: {converged} of {requested} pairs within budget")]
    NotConverged { converged: usize, requested: usize },

    /// The shifted matrix `H - sigma I` is singular (the shift hit an
    /// eigenvalue) or the factorization broke down.
    #[error("singular shift: {0}")]
    SingularShift(String),

    /// Time step too large for the propagator, or a quantity that must
    /// stay positive (weight, volume factor) went non-positive.
    #[error("stability violation: {0}")]
    StabilityViolation(String),

    /// Eigenpair tracking across a parameter step lost its target
    /// (best overlap below threshold), typically inside a degenerate
    /// cluster.
    #[error("degenerate tracking: {0}")]
    DegenerateTracking(String),

    /// Any other numerical failure: non-finite values, factorization
    /// breakdown outside the shift path, iteration blow-up.
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code used by the command-line driver:
    /// 2 = bad configuration or i/o, 3 = convergence failure,
    /// 4 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 2,
            Error::NotConverged { .. } => 3,
            _ => 4,
        }
    }

    /// Shorthand used by io helpers.
    pub fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), msg: err.to_string() }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Relative threshold under which `det g` counts as degenerate.
pub const EPS_DEG: f64 = 1e-14;
