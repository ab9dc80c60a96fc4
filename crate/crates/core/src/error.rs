use thiserror::Error;

/// Errors raised by the numerical routines and the scenario runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension n = {0} is not supported (need n >= 3)")]
    InvalidDimension(usize),
    #[error("vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point lies within {0:e} of the north pole")]
    NorthPoleSingular(f64),
    #[error("sample at distance {distance:e} from the singular set (minimum {minimum:e})")]
    SampleTooCloseToSingularity { distance: f64, minimum: f64 },
    #[error("measure has zero total mass")]
    ZeroMass,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("grid too large: {nodes} nodes exceeds budget {budget}")]
    GridTooLarge { nodes: usize, budget: usize },
    #[error("capacity solver stalled after {iterations} iterations (KKT residual {residual:e})")]
    SolverStalled { iterations: usize, residual: f64 },
    #[error("measure support strays {distance:e} from the evaluation set (spacing {spacing:e})")]
    MeasureSupportMismatch { distance: f64, spacing: f64 },
    #[error("curve passes within {0:e} of an atom")]
    CurveHitsAtom(f64),
    #[error("ray passes within {0:e} of an atom before the shell budget")]
    RayBlocked(f64),
    #[error("no admissible ray directions among {0} samples")]
    NoAdmissibleDirections(usize),
    #[error("Wolff potential at the origin classifies divergent")]
    WolffDivergentAtOrigin,
    #[error("measure support leaves B(0, 1/2): radius {0}")]
    SupportOutsideHalfBall(f64),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("numeric budget exceeded: {0}")]
    NumericBudgetExceeded(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_) => 2,
            Error::NumericBudgetExceeded(_) | Error::SolverStalled { .. } | Error::GridTooLarge { .. } => 3,
            _ => 4,
        }
    }
}
