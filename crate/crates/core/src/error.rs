use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A covariance matrix could not be factorized even with the largest
    /// admissible diagonal jitter.
    #[error("numerical conditioning failure in {stage}: {detail}")]
    Conditioning { stage: String, detail: String },

    #[error("cost of agent {agent} is NaN")]
    NanCost { agent: usize },

    #[error("all agent costs are infinite")]
    AllCostsInfinite,

    /// An agent stayed non-finite after repeated resampling.
    #[error(
        "agent {agent} could not be recovered at iteration {iteration} after {attempts} resamples"
    )]
    Unrecoverable {
        agent: usize,
        iteration: usize,
        attempts: usize,
    },

    #[error("simulation blew up at step {step} (t = {time})")]
    SimulationBlowUp { step: usize, time: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
