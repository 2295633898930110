use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a network needs at least 2 agents, got {0}")]
    TooFewAgents(usize),

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("vertex index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("eigen-solver did not converge ({0})")]
    EigenFailure(&'static str),

    #[error("pattern diagonal entry a[{0}][{0}] is not 1")]
    NonUnitDiagonal(usize),

    #[error("pattern must be square with dimension >= 2, got {rows}x{cols}")]
    BadDimension { rows: usize, cols: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("graph is disconnected (lambda2 = {0:.3e})")]
    DisconnectedGraph(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root refinement did not converge")]
    NoConvergence,

    #[error("step {step} too large for delay {delay}: need step <= delay / 10")]
    StepTooLarge { step: f64, delay: f64 },

    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
