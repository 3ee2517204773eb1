use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid roots: {0}")]
    InvalidRoots(String),

    #[error("discretization failed: {0}")]
    Discretization(String),

    #[error("design error: {0}")]
    Design(String),

    #[error("singular plant: |b| = {b_abs:e} below 1e-9")]
    SingularPlant { b_abs: f64 },

    /// Non-finite or runaway state; `time` is the blow-up instant in seconds.
    #[error("divergence at t = {time} s")]
    Divergence { time: f64 },

    #[error("no stable value found after {attempts} attempts")]
    NoStableValue { attempts: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
