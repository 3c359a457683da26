use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cost profile `{cost}` is not admissible: {invariant} fails at t = {point}")]
    Admissibility {
        cost: String,
        invariant: &'static str,
        point: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown cost id `{id}` (valid: quadratic, power:<p>, alpha21, scaled:<base>:<u>)")]
    UnknownCost { id: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids differ: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("density is zero on every grid point")]
    ZeroDensity,

    #[error("negative value {value} at index {index}")]
    Negative { index: usize, value: f64 },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("measure is not normalized (total mass {total})")]
    Unnormalized { total: f64 },

    #[error("infeasible transport problem: total masses {supply} and {demand} differ")]
    Infeasible { supply: f64, demand: f64 },

    #[error("support of {points} points exceeds the limit of {limit}; coarsen the grid")]
    SupportTooLarge { points: usize, limit: usize },

    #[error("precondition `{check}` violated: {detail}")]
    Precondition { check: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
