/// Crate-wide error type.
///
/// Variants split into two classes for process exit codes: input/usage
/// problems (malformed files, invalid parameters) and numerical failures
/// (non-finite likelihoods, underflow, non-convergence).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("sampler exceeded {0} generations without extinction")]
    NonTermination(u64),
    #[error("singular value decomposition failed to converge")]
    SvdFailure,
    #[error("factor column {0} has norm below 1e-12")]
    DegenerateColumn(usize),
    #[error("likelihood became non-finite at iteration {at_iteration}")]
    NonFiniteLikelihood { at_iteration: usize },
    #[error("update denominator underflowed")]
    NumericalUnderflow,
    #[error("benchmark incomplete: {failed} of {total} fits failed")]
    ReportIncomplete { failed: usize, total: usize },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical machinery (process exit code 2),
    /// false for usage/input errors (exit code 1).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonTermination(_)
                | Error::SvdFailure
                | Error::DegenerateColumn(_)
                | Error::NonFiniteLikelihood { .. }
                | Error::NumericalUnderflow
                | Error::ReportIncomplete { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
