use thiserror::Error;

/// Errors produced by the network, assembly, analysis and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("network is disconnected: {components} components")]
    Disconnected { components: usize },

    #[error("configuration error: {0}")]
    Config(String),

    /// A network or mesh assumption the method relies on does not hold.
    #[error("assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("PCG breakdown at iteration {iteration}: (r, z) = {rz:e}")]
    Breakdown { iteration: usize, rz: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("network generation failed: {0}")]
    Generation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn is_assumption_violation(&self) -> bool {
        matches!(self, Error::AssumptionViolation(_))
    }
}
