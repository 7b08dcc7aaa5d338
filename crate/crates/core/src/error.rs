use thiserror::Error;

use crate::plan::Violation;

/// A single problem found while validating an instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceIssue(pub String);

impl std::fmt::Display for InstanceIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error)]
pub enum SddError {
    #[error("invalid instance: {}", join(.0))]
    InvalidInstance(Vec<InstanceIssue>),

    #[error("invalid plan: {}", join(.0))]
    InvalidPlan(Vec<Violation>),

    #[error("missing model data: {0}")]
    MissingData(String),

    #[error("{what} has size {size}, limit is {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dispatch protocol violation: {0}")]
    Protocol(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for SddError {
    fn from(e: serde_json::Error) -> Self {
        SddError::Malformed(e.to_string())
    }
}

impl From<csv::Error> for SddError {
    fn from(e: csv::Error) -> Self {
        SddError::Malformed(e.to_string())
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, SddError>;
