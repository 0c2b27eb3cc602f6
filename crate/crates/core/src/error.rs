use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("matrix entry ({row}, {col}) lies outside the declared half-bandwidth {bandwidth}")]
    OutsideBand {
        row: usize,
        col: usize,
        bandwidth: usize,
    },

    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,

    #[error("eigensolver failed to converge for eigenvalue {index}")]
    NoConvergence { index: usize },

    #[error("empty accumulation")]
    EmptyAccumulation,

    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("function evaluation at x = {x} is not finite")]
    NonFiniteEvaluation { x: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("Hilbert space has {states} basis states, above the cap of {cap}")]
    StateCapExceeded { states: u128, cap: usize },

    #[error("temperature must be positive, got {0}; use the ground-state path for T = 0")]
    NonPositiveTemperature(f64),

    #[error("invalid site pair ({0}, {1})")]
    InvalidPair(usize, usize),

    #[error("invalid site index {site} for {sites} sites")]
    InvalidSite { site: usize, sites: usize },

    #[error("site {0} carries one-body terms but belongs to no coupled pair")]
    UncoveredSite(usize),

    #[error("invalid spin sector 2j = {two_j} for N = {spins}")]
    InvalidSector { spins: usize, two_j: usize },

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("reduced density matrix is not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    #[error("Renyi order must be positive, got {0}")]
    InvalidOrder(f64),

    #[error("grid has {0} points, at least 5 are required")]
    GridTooCoarse(usize),

    #[error("grid is not {0}")]
    BadGrid(&'static str),

    #[error("maximum lies on the grid boundary at {location}; extend sweep range")]
    BoundaryPeak { location: f64 },

    #[error("curves for N = {0} and N = {1} do not cross in the window")]
    NoCrossing(usize, usize),

    #[error("peak height is zero")]
    ZeroPeak,

    #[error("collapse has no overlapping region for any exponent in the window")]
    NoOverlap,

    #[error("collapse needs at least {needed} sizes, got {got}")]
    TooFewSizes { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
