use thiserror::Error;

use orthowall_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("cannot write {path}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("solver did not converge: {0}")]
    NotConverged(String),
}

/// Whether a library error stems from the inputs rather than the numerics.
fn is_input_error(e: &CoreError) -> bool {
    match e {
        CoreError::InvalidParams(_)
        | CoreError::InvalidOptions(_)
        | CoreError::DimensionMismatch(_)
        | CoreError::ClampViolation(_) => true,
        CoreError::ContinuationStep { source, .. } | CoreError::SweepPoint { source, .. } => {
            is_input_error(source)
        }
        _ => false,
    }
}

impl CliError {
    /// 2 for configuration and validation errors, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Core(e) if is_input_error(e) => 2,
            CliError::Core(_) | CliError::NotConverged(_) => 3,
        }
    }
}
