use thiserror::Error;

/// Failures surfaced by the runner, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigInvalid(_) => 2,
            CliError::BudgetExceeded(_) => 3,
            CliError::NumericalFailure(_) | CliError::Io(_) => 4,
        }
    }
}

impl From<pmesim_core::Error> for CliError {
    fn from(e: pmesim_core::Error) -> Self {
        use pmesim_core::Error as E;
        let msg = e.to_string();
        match e {
            E::NotSquare(..)
            | E::DimMismatch(_)
            | E::NotHermitian { .. }
            | E::WindowViolation(_)
            | E::ConstraintViolated(_)
            | E::InvalidArgument(_) => CliError::ConfigInvalid(msg),
            E::IterationOverflow { .. } | E::BudgetExceeded { .. } | E::TooLarge { .. } => {
                CliError::BudgetExceeded(msg)
            }
            E::NonFinite
            | E::TracelessUnitary(_)
            | E::ZeroProbabilityBranch(_)
            | E::SearchExhausted { .. }
            | E::Numerical(_) => CliError::NumericalFailure(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
