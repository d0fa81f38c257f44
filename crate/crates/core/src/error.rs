use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum WkamError {
    #[error("profile is not strictly convex: h''({at}) = {second} <= 0")]
    ProfileNotConvex { at: f64, second: f64 },

    #[error("profile is not superlinear: {0}")]
    ProfileNotSuperlinear(String),

    #[error("bracketed Newton solve failed for target {target} after {iterations} iterations")]
    NewtonDivergence { target: f64, iterations: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid operator configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("slice mismatch: first kernel ends at slice {end}, second starts at slice {start}")]
    SliceMismatch { end: usize, start: usize },

    #[error("kernel has non-finite or unreachable entries ({count} entries)")]
    NonFiniteKernel { count: usize },

    #[error("alpha growth estimate did not settle: successive slopes {previous} and {current}")]
    NonConvergence { previous: f64, current: f64 },

    #[error("fixed-point iteration did not converge in {max_iters} periods (last residual {last_residual})")]
    NoConvergence {
        max_iters: usize,
        last_residual: f64,
        history: Vec<f64>,
    },

    #[error("time extension does not wrap: slice N_t differs from slice 0 by {defect}")]
    WrapMismatch { defect: f64 },

    #[error("barrier window not settled: last window change {change} exceeds {tol}")]
    WindowNotSettled { change: f64, tol: f64 },

    #[error("Aubry mask is empty at threshold {threshold}")]
    EmptyMask { threshold: f64 },

    #[error("integration step rejected: momentum moved by {jump} in one step")]
    StepRejected { jump: f64 },

    #[error("invalid flow configuration: {0}")]
    InvalidFlow(String),

    #[error("configuration invalid at `{path}`: {message}")]
    ConfigInvalid { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WkamError>;
