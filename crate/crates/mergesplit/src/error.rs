use thiserror::Error;

/// Failure modes shared across the toolkit.
///
/// Numerical routines report *why* a computation cannot be trusted rather
/// than returning poisoned values: domain violations are caught up front,
/// loss of convergence or precision mid-computation maps to a dedicated
/// variant carrying the quantities needed to diagnose the run.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter lies outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series coefficient left the representable floating-point range.
    #[error("coefficient overflow at term {n}")]
    Overflow { n: usize },

    /// A series was evaluated at or beyond its radius of convergence.
    #[error("series divergent: |z|^alpha = {zpow:.6e} >= radius {radius:.6e}")]
    Divergent { zpow: f64, radius: f64 },

    /// Ratio-test estimates failed to settle.
    #[error("radius estimate unstable: ratios vary by {spread:.3e} over the last quartile")]
    RatioUnstable { spread: f64 },

    /// An orbit left the invariant region it must stay inside.
    #[error("trajectory escaped the invariant region at tau = {tau:.6} (u = {u:.6e}, v = {v:.6e})")]
    RegionEscape { tau: f64, u: f64, v: f64 },

    /// An integration made no progress.
    #[error("integration stalled at {at:.6e}: step size collapsed below {step:.3e}")]
    Stalled { at: f64, step: f64 },

    /// Two curves that must overlap for matching have disjoint ranges.
    #[error("no overlap window: {0}")]
    NoOverlap(String),

    /// A fitted quantity disagrees with its predicted value beyond tolerance.
    #[error("fit mismatch: {what} = {got:.6e}, expected {expected:.6e} (rel err {rel:.3e})")]
    FitMismatch {
        what: &'static str,
        got: f64,
        expected: f64,
        rel: f64,
    },

    /// A fit window contains too few samples to regress on.
    #[error("fit window underpopulated: {0}")]
    WindowTooSmall(String),

    /// Inverted output oscillates where it must be monotone.
    #[error("inversion output non-monotone: relative oscillation {rel:.3e} at x = {x:.6e}")]
    Oscillation { rel: f64, x: f64 },

    /// Alternating-series cancellation destroyed the requested precision.
    #[error("precision loss: cancellation ratio {ratio:.3e} at x = {x:.6e}, raise the series cutoff")]
    PrecisionLoss { ratio: f64, x: f64 },

    /// Malformed run configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
