//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

use crate::model::{Action, Observation};

/// Configuration could not be loaded or failed validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid value at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(String),
}

impl ConfigError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { path: path.into(), message: message.into() }
    }

    /// Dotted path of the offending field, empty when not applicable.
    pub fn path(&self) -> &str {
        match self {
            ConfigError::Invalid { path, .. } => path,
            _ => "",
        }
    }
}

/// An observation was evaluated against an action that cannot produce it.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("observation {observation} cannot follow action {action}: DSA reports follow DSA, clinical bundles follow every other action")]
pub struct LikelihoodDomainError {
    pub action: Action,
    pub observation: Observation,
}
