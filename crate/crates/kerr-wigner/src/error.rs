use thiserror::Error;

/// Unified error type for grid construction, series evaluation, linear
/// algebra and the evolution loop.
#[derive(Debug, Error)]
pub enum KerrError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bandwidth violation: entry ({row}, {col}) lies outside band m1={m1}, m2={m2}")]
    BandwidthViolation {
        row: usize,
        col: usize,
        m1: usize,
        m2: usize,
    },

    #[error("singular matrix: pivot magnitude {pivot:e} below threshold at elimination step {step}")]
    SingularMatrix { step: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("series did not converge within {max_terms} terms (last/sum ratio {ratio:e})")]
    InsufficientTerms { max_terms: usize, ratio: f64 },

    #[error("precision too low: the oscillatory series requires at least {required} significant digits, policy provides {given}")]
    PrecisionTooLow { required: u32, given: u32 },

    #[error("series imaginary residue {residue:e} exceeds the reality check threshold")]
    ImaginaryResidue { residue: f64 },

    #[error("normalization drift at tau = {tau}: integral(W) = {integral} strays from 1 beyond tolerance {tolerance:e} (mesh too coarse or time step too large)")]
    NormalizationDrift { tau: f64, integral: f64, tolerance: f64 },

    #[error("sample window exceeds grid: corner radius {corner_radius} > r_max {r_max}")]
    WindowExceedsGrid { corner_radius: f64, r_max: f64 },

    #[error("window area {area} exceeds the sub-Planck bound of 1")]
    WindowTooLarge { area: f64 },
}

pub type Result<T> = std::result::Result<T, KerrError>;
