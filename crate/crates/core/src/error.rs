use alloc::string::String;

/// Errors raised by the synthesis and evaluation routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{0} qubits exceeds the supported maximum of {max}", max = crate::lie_basis::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("time {t} lies outside the cycle [0, {period}]")]
    TimeOutOfRange { t: f64, period: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible pulse budget: {0}")]
    InfeasibleBudget(String),

    #[error("basis is not closed under the frame action (residual {0:e})")]
    BasisNotClosed(f64),

    #[error("step count too small: Richardson residual {0:e} exceeds tolerance")]
    StepCountTooSmall(f64),

    #[error("no feasible point found after {restarts} restarts (best penalty {best_penalty:e})")]
    NoFeasiblePoint { restarts: usize, best_penalty: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
