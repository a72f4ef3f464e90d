use thiserror::Error;

/// Errors raised by the core numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} outside the supported range 1..=3")]
    UnsupportedDimension(usize),

    #[error("parameter out of range: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("grid of size {grid} along axis {axis} aliases frequencies up to {degree} (needs at least {needed})")]
    Aliasing { axis: usize, grid: usize, degree: i64, needed: usize },

    #[error("materializing {needed} bytes exceeds the memory budget of {budget} bytes and streaming is disabled")]
    MemoryBudget { needed: u64, budget: u64 },

    #[error("result support of {size} coefficients exceeds the cap of {cap}")]
    SupportCap { size: usize, cap: usize },

    #[error("grid function is empty")]
    EmptyGrid,

    #[error("grid set covers every cell")]
    FullMask,

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("quantity `{0}` was not retained by the streaming evaluation")]
    NotRetained(String),

    #[error("no hyperbolic kernel construction found for N={0}, d={1}")]
    KernelConstruction(u64, usize),

    #[error("remez measure {measure} outside the admissible regime: {regime}")]
    RegimeViolation { measure: f64, regime: String },

    #[error("empty residue family H_{n}({a},{b})")]
    EmptyFamily { n: u32, a: u32, b: u32 },

    #[error("spectral orthogonality violated at {index:?}: |coefficient| = {magnitude:e}")]
    Orthogonality { index: Vec<i64>, magnitude: f64 },

    #[error("kernel does not reproduce frequency {index:?}: coefficient {value:e}")]
    Reproduction { index: Vec<i64>, value: f64 },

    #[error("jackson exponent r={r} too small for p={p} (needs r > 1/(2p))")]
    JacksonExponent { r: u32, p: f64 },

    #[error("no admissible shift: every shift hits the set (|B|·m = {load})")]
    NoAdmissibleShift { load: f64 },

    #[error("shift search exhausted although |B|·m = {load} < 1")]
    ShiftNotFound { load: f64 },

    #[error("discretization constant {measured} exceeds the supplied D = {supplied} at shift {shift:?}")]
    ShiftUniformity { supplied: f64, measured: f64, shift: Vec<f64> },

    #[error("unsupported branch: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
