use std::fmt::Display;

/// Failures of a subcommand, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or spec file (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// Tableau or splitting scheme could not be built (exit 3).
    #[error("scheme failure: {0}")]
    Scheme(String),
    /// An integration diverged (exit 4).
    #[error("diverged: {0}")]
    Diverged(String),
    /// An order measurement had too little data (exit 5).
    #[error("measurement failure: {0}")]
    Measurement(String),
    /// Reading or writing files (exit 2).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    /// Writing CSV (exit 2).
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 2,
            CliError::Scheme(_) => 3,
            CliError::Diverged(_) => 4,
            CliError::Measurement(_) => 5,
        }
    }

    pub(crate) fn config(e: impl Display) -> Self {
        CliError::Config(e.to_string())
    }

    pub(crate) fn scheme(e: impl Display) -> Self {
        CliError::Scheme(e.to_string())
    }
}

impl From<hbvm_core::Error> for CliError {
    fn from(e: hbvm_core::Error) -> Self {
        use hbvm_core::Error as E;
        match e {
            E::Config(m) => CliError::Config(m),
            E::Measurement(m) => CliError::Measurement(m.to_string()),
            E::RootFinding { .. }
            | E::DegenerateAbscissae { .. }
            | E::Optimization
            | E::Factorization { .. }
            | E::Eigen => CliError::scheme(e),
            E::Singular | E::Evaluation => CliError::Diverged(e.to_string()),
            E::Domain(_) | E::Dimension { .. } => CliError::config(e),
        }
    }
}

/// Result alias for the CLI.
pub type Result<T> = std::result::Result<T, CliError>;
