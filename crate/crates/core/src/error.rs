use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("matrix is not Hermitian (deviation {deviation:.3e} > {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("trace of unitary is too small to define a phase (|Tr U|/d = {0:.3e})")]
    TracelessUnitary(f64),

    #[error("spread-time product {0:.6} is outside the uniqueness window (< pi/2)")]
    WindowViolation(f64),

    #[error("iterated composition needs {required} operations, budget is {budget}")]
    IterationOverflow { required: u128, budget: u128 },

    #[error("simulation dimension {required} exceeds budget {budget}")]
    BudgetExceeded { required: usize, budget: usize },

    #[error("outcome probability {0:.3e} is too small to condition on")]
    ZeroProbabilityBranch(f64),

    #[error("input of size {size} exceeds the enumeration limit {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("bound constraint violated: c*log(1 + c*t/sigma^2) = {0:.6} must be < 1")]
    ConstraintViolated(f64),

    #[error("no k <= {k_max} passed the coherence threshold")]
    SearchExhausted { k_max: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
