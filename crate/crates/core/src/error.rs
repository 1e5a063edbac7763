use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::quadrature::QuadratureError;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error(transparent)]
    Quadrature(#[from] QuadratureError),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
