use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column {column} of {matrix} has no sample variation")]
    DegenerateColumn { matrix: &'static str, column: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("probability {0} is outside (0, 1)")]
    ProbabilityDomain(f64),

    #[error("penalty quantile undefined: gamma/(2*{n_targets}*{dict_size}) = {tail} >= 1")]
    PenaltyDomain {
        n_targets: usize,
        dict_size: usize,
        tail: f64,
    },

    #[error("penalty loading {index} is zero (constant target or zero column)")]
    DegenerateLoading { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("first-stage target {target}: {source}")]
    FirstStage {
        target: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("Omega_hat is singular (smallest eigenvalue {eigenvalue:e})")]
    SingularOmega { eigenvalue: f64 },

    #[error("standard error is zero; the t-test is undefined")]
    ZeroStandardError,

    #[error("no K in the candidate grid produced a fit")]
    EmptyGrid,
}

pub type Result<T> = std::result::Result<T, Error>;
