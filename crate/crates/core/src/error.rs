use thiserror::Error;

/// Errors raised by the operator algebra, solvers and formula layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error("slot {slot} out of range for a signature with {len} slots")]
    SlotOutOfRange { slot: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode signatures do not match: {left:?} vs {right:?}")]
    SignatureMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("truncation {n_fock} too small (need at least {min})")]
    TruncationTooSmall { n_fock: usize, min: usize },

    #[error("operator is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver did not converge: {0}")]
    EigenNonConvergence(String),

    #[error("parameter `{name}` = {value} outside its validity window: {reason}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("ratio undefined: {0}")]
    UndefinedRatio(&'static str),

    #[error("negative rate `{name}` = {value}")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("total bath coupling is zero, cannot form effective occupations from temperatures")]
    ZeroCoupling,

    #[error("transition frequency {delta:.3e} between levels {lower} and {upper} is below resolution")]
    DegenerateTransition {
        lower: usize,
        upper: usize,
        delta: f64,
    },

    #[error("steady state is not unique (residual {residual:.3e}, gap estimate {gap:?})")]
    NonUniqueSteadyState { residual: f64, gap: Option<f64> },

    #[error("problem needs {required} unknowns, over the configured cap of {cap}")]
    MemoryCapExceeded { required: usize, cap: usize },

    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    #[error("label-diagonal subspace is not invariant under the Liouvillian")]
    NotInvariant,

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration budget of {steps} steps exceeded at t = {t:.6e}")]
    BudgetExceeded { steps: usize, t: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
