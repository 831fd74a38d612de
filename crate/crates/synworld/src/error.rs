use std::path::Path;

use synworld_core::environment::EvalError;
use synworld_core::llm::LlmError;
use synworld_core::mcts::SearchError;
use synworld_core::optimizer::OptimizeError;
use synworld_core::synthesis::SynthesisError;

/// Command failure, split by the exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Unreadable or invalid input: files, configuration, knowledge.
    #[error("{0}")]
    Input(String),
    /// The chat backend or transport failed.
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn at(path: &Path, err: impl std::fmt::Display) -> Self {
        Self::Input(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Backend(_) => 3,
        }
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::InvalidRequest(_) => Self::Input(e.to_string()),
            _ => Self::Backend(e.to_string()),
        }
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::Backend(inner) => inner.into(),
            other => Self::Input(other.to_string()),
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Backend(inner) => inner.into(),
            other => Self::Input(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<SearchError> for CliError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::Expansion(inner) => inner.into(),
            SearchError::Simulation(inner) => inner.into(),
            other => Self::Input(other.to_string()),
        }
    }
}
