use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numeric failure: {0}")]
    Numeric(solvdiff_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("self test failed: {0}")]
    SelfTest(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::SelfTest(_) => 3,
        }
    }
}

/// Parameter and layout problems are configuration errors; failures
/// inside special functions or samplers are numeric.
impl From<solvdiff_core::Error> for CliError {
    fn from(e: solvdiff_core::Error) -> Self {
        use solvdiff_core::Error as E;
        match e {
            E::InvalidParameter(_) | E::SchemeMismatch { .. } | E::GridMismatch(_) | E::DimensionBudget { .. } => {
                CliError::Config(e.to_string())
            }
            E::Domain { .. } | E::NoConvergence { .. } | E::Bracket(_) | E::Table(_) => CliError::Numeric(e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
