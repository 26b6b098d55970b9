use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("singular linear system ({context})")]
    SingularSystem { context: String },

    #[error("interpolation nodes are not distinct")]
    NodesNotDistinct,

    #[error(
        "derivative ({dx}, {dy}) requested on the diagonal x = y = {at}; \
         total order above {max} is discontinuous there"
    )]
    DerivativeAtJump { dx: usize, dy: usize, at: f64, max: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid collocation grid: {0}")]
    InvalidGrid(String),

    #[error(
        "Gram matrix is not positive definite at basis index {index} \
         (residual norm^2 {norm_sq:e}); reduce the number of collocation points"
    )]
    NotPositiveDefinite { index: usize, norm_sq: f64 },

    #[error("integration blew up at step {step} (x = {x})")]
    NonFinite { step: usize, x: f64 },

    #[error(
        "shooting Newton stagnated after {iterations} iterations: \
         residual ({:e}, {:e}) at slopes ({}, {})",
        residual.0, residual.1, slopes.0, slopes.1
    )]
    NewtonStagnation {
        iterations: usize,
        residual: (f64, f64),
        slopes: (f64, f64),
    },

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown reference table `{0}`")]
    UnknownTable(String),

    #[error("table {table} is for (m={table_m}, re={table_re}) but the report is for (m={m}, re={re})")]
    TableMismatch {
        table: String,
        table_m: f64,
        table_re: f64,
        m: f64,
        re: f64,
    },

    #[error("reference data: {0}")]
    ReferenceData(String),
}
