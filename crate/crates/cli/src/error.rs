use std::path::Path;

use refocus::Error as CoreError;

/// Exit codes are a scripting contract; do not renumber.
pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_UNCONVERGED: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: CoreError,
    },

    #[error("{0}")]
    Validation(String),

    #[error("design reached fidelity {fidelity:.6}, below the floor {floor}")]
    Unconverged { fidelity: f64, floor: f64 },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Unconverged { .. } => EXIT_UNCONVERGED,
            CliError::Core { source, .. } => match source {
                CoreError::EigenSolver
                | CoreError::BranchCut { .. }
                | CoreError::NotHermitian(_)
                | CoreError::NotUnitary(_)
                | CoreError::ZeroTracelessPart(_)
                | CoreError::NoSpectralPeak => EXIT_NUMERICAL,
                _ => EXIT_VALIDATION,
            },
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Validation(format!("{}: {e}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Attaches context to core errors.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for Result<T, CoreError> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|source| CliError::Core { context: what(), source })
    }
}
