use thiserror::Error;

/// Errors produced by model construction, simulation, and training.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// Free-run simulation produced a non-finite state or output. Carries
    /// the 1-based step index at which the trajectory blew up.
    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
