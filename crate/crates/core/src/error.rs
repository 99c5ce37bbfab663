use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("trajectory diverged at step {step}")]
    Diverged { step: usize },

    #[error("series of length {len} is too short for a look-back window of {lookback}")]
    SeriesTooShort { len: usize, lookback: usize },

    #[error("cannot rescale a matrix with spectral radius {0:e}")]
    DegenerateSpectrum(f64),

    #[error("spectral radius estimate did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },

    #[error("memory budget exceeded: need {required} bytes, cap is {budget} bytes")]
    MemoryBudget { required: usize, budget: usize },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("runs belong to different tasks: {0} vs {1}")]
    TaskMismatch(String, String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
