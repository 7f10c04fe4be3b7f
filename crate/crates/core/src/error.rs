use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dual filter list has {got} entries, expected {expected}")]
    DualLengthMismatch { expected: usize, got: usize },

    #[error("filter list has {got} entries, expected {expected}")]
    FilterCount { expected: usize, got: usize },

    #[error("scale must be at least 2, got {0}")]
    BadScale(usize),

    #[error("filter bank is not reconstructive: {0}")]
    NotReconstructive(String),

    #[error("loop matrix is singular: |det A(z)| = {min_abs_det:.3e} at theta = {theta:.6}")]
    SingularLoop { min_abs_det: f64, theta: f64 },

    #[error("m0(1) = {value:.12} but the normalization requires sqrt(N) = {expected:.12}")]
    BadNormalization { value: f64, expected: f64 },

    #[error("anchor subspace is trivial")]
    EmptyAnchor,

    #[error("pull-back of e_{mode} did not reach the anchor within {cap} steps")]
    DepthExceeded { mode: i64, cap: usize },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("level {level} Gram is not positive: min eigenvalue {min_eig:.3e}, hermiticity residual {herm_residual:.3e}")]
    GramNotPositive {
        level: usize,
        min_eig: f64,
        herm_residual: f64,
    },

    #[error("level size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("letter transform is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
