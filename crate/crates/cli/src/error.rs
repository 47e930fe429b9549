use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Solver(#[from] subdiff_core::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("checks failed: {0}")]
    Checks(String),
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Io { path: path.display().to_string(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(e) => solver_code(e),
            Self::Io { .. } => 5,
            Self::Checks(_) => 1,
        }
    }
}

fn solver_code(e: &subdiff_core::Error) -> i32 {
    use subdiff_core::Error as E;
    match e {
        E::Domain(_) | E::GridMismatch(_) | E::Aliasing { .. } | E::Resource { .. } => 2,
        E::Admissibility(_) => 3,
        E::Convergence(_) | E::ModeNonConvergence { .. } | E::InverseNonConvergence { .. } | E::SingularSystem { .. } => 4,
        E::Iterate { source, .. } => solver_code(source),
    }
}
