use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(String),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("chain is not unichain (rank deficiency {0})")]
    NotUnichain(usize),
    #[error("MDP is not communicating")]
    NotCommunicating,
    #[error("relative value iteration did not converge within {0} sweeps")]
    IterationCap(usize),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("coverage violation: behavior probability of action {action} in state {state} is zero")]
    Coverage { state: usize, action: usize },
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Solver failures as opposed to bad input.
    pub fn is_solver_error(&self) -> bool {
        matches!(
            self,
            Error::NotUnichain(_) | Error::NotCommunicating | Error::IterationCap(_) | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
