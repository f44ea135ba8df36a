use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sample count {0} is odd; grids need an even number of samples per side")]
    OddSampleCount(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shooting bracket [{lo}, {hi}] does not straddle the soliton amplitude")]
    BracketNotFound { lo: f64, hi: f64 },
    #[error("no convergence after {iterations} iterations ({what})")]
    NonConvergence { what: String, iterations: usize },
    #[error("radial profile failed validation: {0}")]
    InvalidProfile(String),
    #[error("box half-width {half_width} is smaller than the resolved soliton core radius {core_radius}")]
    BoxTooSmall { half_width: f64, core_radius: f64 },

    #[error("field is not normalized (mass = {mass})")]
    UnnormalizedInput { mass: f64 },
    #[error("field has vanishing quartic integral")]
    DegenerateField,
    #[error("dilated width {width} falls below the resolution limit {limit}")]
    ResolutionExceeded { width: f64, limit: f64 },
    #[error("coupling {a} is within the guard band below the critical coupling {critical}")]
    CriticalCouplingGuard { a: f64, critical: f64 },
    #[error("blow-up width {eps} is under-resolved (limit {limit})")]
    UnderResolved { eps: f64, limit: f64 },
    #[error("need at least {needed} resolved entries, found {found}")]
    InsufficientData { needed: usize, found: usize },

    #[error("file format error: {0}")]
    FileFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
