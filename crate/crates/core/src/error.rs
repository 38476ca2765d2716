//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point has no coordinates")]
    EmptyPoint,

    #[error("coordinate {index} is {value}, expected a finite value > 0")]
    BadCoordinate { index: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rectangle corners are not ordered: lower {lower:?} !<= upper {upper:?}")]
    UnorderedRect { lower: Vec<f64>, upper: Vec<f64> },

    #[error("function evaluation at vertex {vertex:?} returned {value}")]
    VertexEvaluation { vertex: Vec<f64>, value: f64 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("mixing measure has no mass after pruning")]
    EmptyMixingMeasure,

    #[error("weight {index} is {value}, expected a finite value >= 0")]
    BadWeight { index: usize, value: f64 },

    #[error("not an SMU density on this grid: weight at grid point {point:?} is {value}")]
    NotSmuOnGrid { point: Vec<f64>, value: f64 },

    #[error("grid values sum to mass {mass}, expected 1 within {tol}")]
    MassMismatch { mass: f64, tol: f64 },

    #[error("data point {index} is covered by no candidate (mixture density is zero there)")]
    UncoveredDataPoint { index: usize },

    #[error("dimension {0} is not supported; this solver handles d <= 4")]
    DimensionTooLarge(usize),

    #[error("grid has {cells} cells, above the exact-integration limit {limit}; use the Monte Carlo path")]
    CellOverflow { cells: u64, limit: u64 },

    #[error("perturbation rectangle leaves the positive orthant at n = {n} (n below n_0); smallest valid n is {n0}")]
    BelowN0 { n: u64, n0: u64 },

    #[error("sign condition violated: (-1)^d * b = {signed_b}, expected > 0")]
    BadDerivativeSign { signed_b: f64 },

    #[error("theta is {0}, expected a value strictly inside (0, 1)")]
    BadTheta(f64),

    #[error("{context}: base truth model must be the exp-product model")]
    ExpProductBaseRequired { context: &'static str },

    #[error("{0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
