use thiserror::Error;

/// Errors raised by the simulation and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QflowError {
    #[error("grid size {0} must be a power of two and at least 16")]
    GridSize(usize),
    #[error("degenerate interval: x_max ({x_max}) must exceed x_min ({x_min})")]
    DegenerateInterval { x_min: f64, x_max: f64 },
    #[error("wavefunction has zero norm")]
    ZeroNorm,
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("packet too wide for grid: edge tail mass {tail:.3e} exceeds {limit:.1e}")]
    PacketTooWide { tail: f64, limit: f64 },
    #[error("t_final / dt = {ratio} is not an integer step count")]
    NonIntegerSteps { ratio: f64 },
    #[error("series has {got} states, need at least {need}")]
    TooFewStates { got: usize, need: usize },
    #[error("state is not a member of the series")]
    NotInSeries,
    #[error("position {x} lies in a masked node region at t = {t}")]
    MaskedRegion { x: f64, t: f64 },
    #[error("density at x = {x} is below the node threshold")]
    Node { x: f64 },
    #[error("position {x} left the grid interior at t = {t}")]
    LeftGrid { x: f64, t: f64 },
    #[error("time {t} outside series span [{t0}, {t1}]")]
    TimeOutOfRange { t: f64, t0: f64, t1: f64 },
    #[error("exhaustive path sum needs {configs} configurations, limit is {limit}")]
    ExhaustiveTooLarge { configs: f64, limit: f64 },
    #[error("Monte Carlo standard error {stderr:.3e} exceeds tolerance {tolerance:.3e}")]
    MonteCarloVariance { stderr: f64, tolerance: f64 },
    #[error("momentum content at the Nyquist edge is {0:.3e}, above 1e-10")]
    NyquistContent(f64),
}

pub type Result<T> = std::result::Result<T, QflowError>;
