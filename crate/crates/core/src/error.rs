use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e})")]
    NonSymmetric { asymmetry: f64 },
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("equalizer size 2^{exponent} exceeds the cap of {cap}")]
    SizeOverflow { exponent: u32, cap: usize },
    #[error("point is not critical (gradient norm {grad_norm:.3e})")]
    NotCritical { grad_norm: f64 },
    #[error("point is already equalized (column-norm gap {gap:.3e})")]
    AlreadyEqualized { gap: f64 },
    #[error("SGD diverged at step {step}")]
    Diverged { step: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}
