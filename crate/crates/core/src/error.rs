use thiserror::Error;

use crate::solver::SolveReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("fracture {fracture} is not mesh-conforming (segment {segment}): {reason}")]
    Conformity {
        fracture: usize,
        segment: usize,
        reason: String,
    },

    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("solver did not converge: {0}")]
    Solver(SolveReport),

    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}

pub(crate) fn geom<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Geometry(msg.into()))
}
