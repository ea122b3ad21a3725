use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate query embedding")]
    DegenerateQuery,
    #[error("degenerate frame embedding at row {0}")]
    DegenerateFrame(usize),
    #[error("invalid kernel spec: {0}")]
    InvalidKernel(&'static str),
    #[error("nonpositive relevance at index {0}")]
    NonpositiveRelevance(usize),
    #[error("lambda must be positive and finite")]
    InvalidLambda,
    #[error("segment size must be at least 1")]
    InvalidSegmentSize,
    #[error("budget exceeds candidates ({budget} > {candidates})")]
    BudgetExceedsCandidates { budget: usize, candidates: usize },
    #[error("budget exceeds frames ({budget} > {frames})")]
    BudgetExceedsFrames { budget: usize, frames: usize },
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("condition and candidate sets overlap at index {0}")]
    OverlappingCondition(usize),
    #[error("inconsistent trace: {0}")]
    InconsistentTrace(&'static str),
    #[error("infeasible segment sizes: {0}")]
    InfeasibleSizes(&'static str),
    #[error("oracle limit exceeded: {0}")]
    OracleLimit(&'static str),
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("internal error: {0}")]
    Internal(&'static str),
}

impl Error {
    /// True for failures that come from the numbers rather than the request shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::DegenerateQuery
                | Error::DegenerateFrame(_)
                | Error::NonpositiveRelevance(_)
                | Error::Asymmetric { .. }
                | Error::Internal(_)
        )
    }
}
