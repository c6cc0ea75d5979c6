use thiserror::Error;

/// Errors raised by data validation and the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cohort: {0}")]
    InvalidCohort(String),
    #[error("dimension mismatch for {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("subject index {index} out of range for a cohort of {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("cohort contains no events")]
    NoEvents,
    #[error("invalid design: {0}")]
    InvalidDesign(String),
    #[error("inconsistent sample: {0}")]
    InconsistentSample(String),
    #[error("subject {index} is a selected control with zero inclusion probability")]
    CorruptWeight { index: usize },
    #[error("zero denominator while computing {0}")]
    ZeroDenominator(&'static str),
    #[error("model fit failed: {0}")]
    Fit(#[from] FitError),
    #[error("need at least 2 usable replicates, got {0}")]
    TooFewReplicates(usize),
}

/// Reasons a model fit does not produce an estimate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("no event carries positive weight")]
    NoEvents,
    #[error("weighted outcome is degenerate (one class has no mass)")]
    DegenerateOutcome,
    #[error("design matrix is rank deficient among weighted subjects")]
    RankDeficient,
    #[error("did not converge in {iterations} iterations (score sup-norm {score_norm:e})")]
    NotConverged { iterations: usize, score_norm: f64 },
    #[error("coefficients diverged after {iterations} iterations (max |coef| {max_coef:e})")]
    Diverged { iterations: usize, max_coef: f64 },
    #[error("objective became non-finite")]
    NonFinite,
}

impl FitError {
    /// True for the outcomes that count as statistical non-convergence
    /// rather than malformed input.
    pub fn is_non_convergence(&self) -> bool {
        matches!(
            self,
            FitError::NotConverged { .. } | FitError::Diverged { .. } | FitError::NonFinite
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
