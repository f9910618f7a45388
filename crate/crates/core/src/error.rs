use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {dim}: at least 2 design variables are required")]
    InvalidDimension { dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid problem data: {0}")]
    ProblemData(String),

    #[error("population of {size} cannot mate (crossover needs at least 2 members)")]
    InsufficientPopulation { size: usize },

    #[error("ledger violation: individual {id} is already officially evaluated")]
    LedgerViolation { id: u64 },

    #[error("budget too small: max_fe {max_fe} must exceed the initial sample of {initial}")]
    BudgetTooSmall { max_fe: usize, initial: usize },

    #[error("search stalled: {cycles} consecutive cycles without a counted evaluation")]
    Stalled { cycles: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("trial {coordinates} failed: {source}")]
    Trial {
        coordinates: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
