use thiserror::Error;

pub type Result<T, E = SgError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SgError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid branching weights: {0}")]
    InvalidWeights(String),

    #[error("{what} = {value} is outside the admissible range [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// The requested composition or tree set carries zero total weight.
    #[error("no admissible configuration: {0}")]
    NoAdmissible(String),

    #[error("solver did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NoConvergence { iterations: usize, grad_norm: f64 },

    #[error("stationary point left the box V at coordinate {index} (m = {value}, bounds [{lo}, {hi}])")]
    BoundaryHit {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("exact arithmetic unavailable: {0}")]
    NotExact(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn check_range(what: &'static str, value: usize, min: usize, max: usize) -> Result<()> {
    if value < min || value > max {
        Err(SgError::OutOfRange {
            what,
            value,
            min,
            max,
        })
    } else {
        Ok(())
    }
}
