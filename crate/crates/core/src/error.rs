use std::path::PathBuf;

use thiserror::Error;

use crate::scenario::ValidationReport;
use crate::socp::SolverError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed scenario document: {0}")]
    Json(#[from] serde_json::Error),

    #[error("scenario failed validation:\n{0}")]
    Invalid(ValidationReport),

    #[error("structural error: {0}")]
    Structural(String),

    #[error(transparent)]
    Solver(#[from] SolverError),

    #[error("solution is not integral within {tol:e}: {}", columns.join(", "))]
    NonIntegral { tol: f64, columns: Vec<String> },

    #[error("enumeration domain has {product} assignments, limit is {limit}")]
    DomainTooLarge { product: u128, limit: u128 },

    #[error("routed objective {routed} is below static objective {stat}")]
    DominanceViolated { routed: f64, stat: f64 },
}
