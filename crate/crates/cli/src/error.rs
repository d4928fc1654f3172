use gaussian_tails::TailError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("spec error: {0}")]
    Spec(String),

    #[error("invalid `{field}`: {reason}")]
    Field { field: String, reason: String },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: TailError,
    },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("replay: {0}")]
    Replay(String),
}

impl CliError {
    pub fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Field {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// 0 success, 2 validation, 3 oracle failure, 4 convergence budget
    /// exhausted; I/O failures are 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) | CliError::Field { .. } | CliError::Replay(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core { source, .. } => match source {
                TailError::InvalidParameter { .. }
                | TailError::OutOfDomain(_)
                | TailError::IdenticalPortfolios { .. } => 2,
                TailError::Oracle(_) | TailError::NoHits { .. } => 3,
                TailError::NonConvergence { .. } | TailError::BudgetExhausted(_) => 4,
            },
        }
    }
}

pub(crate) trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T> Context<T> for Result<T, TailError> {
    fn context(self, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|source| CliError::Core {
            context: what(),
            source,
        })
    }
}
