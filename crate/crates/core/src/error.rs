use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node {node} lies outside the domain ({domain})")]
    Domain { node: String, domain: String },

    #[error("negative value {value} at node {node}; tree functions must be non-negative")]
    NegativeValue { node: String, value: String },

    #[error("precondition failed: {condition}{}", witness_suffix(.witness))]
    Precondition {
        condition: String,
        witness: Option<String>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resource bound exceeded: {what} needs {needed}, limit is {limit}")]
    Resource {
        what: String,
        needed: u128,
        limit: u128,
    },

    #[error("exact arithmetic cannot represent {0}; use float mode")]
    Inexact(String),

    #[error("equilibrium solver did not converge after {iterations} iterations (kkt residual {residual:e})")]
    NotConverged { iterations: u64, residual: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn witness_suffix(w: &Option<String>) -> String {
    match w {
        Some(node) => format!(" (witness node \"{node}\")"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn precondition(condition: impl Into<String>, witness: Option<String>) -> Self {
        Error::Precondition {
            condition: condition.into(),
            witness,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
