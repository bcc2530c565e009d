use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch")]
    GridMismatch,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty knoll: shape does not reach the grid")]
    EmptyKnoll,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported format version {0}")]
    Version(String),
    #[error("residual is zero: on the basis pursuit branch")]
    OnBpBranch,
    #[error("pareto slope is nonnegative ({0}); root finding broke down")]
    SlopeBreakdown(f64),
    #[error("adjoint inconsistency: relative error {0:e}")]
    AdjointMismatch(f64),
    #[error("observed set empty")]
    ObservedSetEmpty,
    #[error("dictionary size {count} exceeds cap {cap}")]
    DictionaryTooLarge { count: usize, cap: usize },
    #[error("config: {0}")]
    Config(String),
    #[error("image: {0}")]
    Image(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
