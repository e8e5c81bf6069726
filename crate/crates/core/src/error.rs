use thiserror::Error;

use crate::eigensolve::Spectrum;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol is not convex: midpoint defect {defect:e} at sample {sample}")]
    NonConvexSymbol { defect: f64, sample: usize },

    #[error("kernel evaluated at coincident points")]
    CoincidentPoints,

    #[error("kernel tail mass does not converge beyond radius {radius}")]
    DivergentTail { radius: f64 },

    #[error("no s in [{lo:e}, {hi:e}] satisfies the rate criterion for r = {r}")]
    EmptyCriterion { r: f64, lo: f64, hi: f64 },

    #[error("rate integral diverges: fitted tail exponent {exponent} is not negative")]
    DivergentRate { exponent: f64 },

    #[error("delta {delta} outside the admissible window (0, {limit})")]
    InadmissibleDelta { delta: f64, limit: f64 },

    #[error("heat-trace maximiser sits on the window boundary t = {t:e}")]
    WindowTooNarrow { t: f64 },

    #[error("kernel bandwidth {bandwidth} exceeds the cap {cap}")]
    BandwidthExceeded { bandwidth: usize, cap: usize },

    #[error("dimension {0} is not supported (only 1 and 2)")]
    UnsupportedDimension(usize),

    #[error("Lanczos did not converge: {converged} of {requested} eigenvalues after {iterations} steps")]
    NoConvergence {
        converged: usize,
        requested: usize,
        iterations: usize,
        partial: Box<Spectrum>,
    },

    #[error("Lanczos breakdown persisted after {attempts} restarts")]
    BreakdownDetected { attempts: usize },

    #[error("dense eigensolver limited to {limit} rows, got {dim}")]
    DimensionTooLarge { dim: usize, limit: usize },

    #[error("quadrature did not reach tolerance {tol:e} (last change {change:e})")]
    QuadratureNotConverged { tol: f64, change: f64 },

    #[error("fit window holds {points} points, at least {required} needed")]
    WindowTooSmall { points: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
