use thiserror::Error;

use crate::lp::LpError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid agent: {0}")]
    InvalidAgent(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("invalid weight parameters: {0}")]
    InvalidParams(String),

    #[error("type {value} is not in the support of agent {agent}")]
    OutOfSupport { agent: usize, value: f64 },

    #[error("grid too large: {profiles} profiles exceeds cap {cap}")]
    GridTooLarge { profiles: usize, cap: usize },

    #[error("linear program failed: {0}")]
    Solver(#[from] LpError),

    #[error("{0}")]
    Infeasible(String),

    #[error("multiple liars were caught; the outcome is unspecified")]
    MultipleLiarsCaught,

    #[error("numerical fault: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
