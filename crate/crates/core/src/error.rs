use std::fmt;

use thiserror::Error;

/// Which precondition of the spectral reduction failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// The measurement and source dimensions differ.
    SquareCross,
    /// `Q_{X,S|Y}` is not invertible.
    InvertibleCross,
    /// `Q_{S|Y}` is not positive definite.
    MeasurementPositive,
    /// `Q_{X|Y}` is not positive definite.
    SourcePositive,
    /// `Q_{X|Y} - Q_{X|S,Y}` is not positive definite.
    StrictConditioningGain,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Hypothesis::SquareCross => "n_x = n_s",
            Hypothesis::InvertibleCross => "Q_{X,S|Y} invertible",
            Hypothesis::MeasurementPositive => "Q_{S|Y} > 0",
            Hypothesis::SourcePositive => "Q_{X|Y} > 0",
            Hypothesis::StrictConditioningGain => "Q_{X|Y} > Q_{X|S,Y}",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("covariance is not symmetric (residual {residual:.3e} > tolerance {tolerance:.3e})")]
    NotSymmetric { residual: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.6e}, tolerance {tolerance:.3e})")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error(
        "side-information covariance Q_Y is not invertible (min eigenvalue {min_eigenvalue:.6e})"
    )]
    SingularY { min_eigenvalue: f64 },

    #[error("posterior covariance is not dominated by the prior (min eigenvalue of difference {min_eigenvalue:.6e})")]
    NotNested { min_eigenvalue: f64 },

    #[error("infeasible distortion covariance: {0}")]
    InfeasibleSigma(String),

    #[error("test-channel noise covariance is negative (min eigenvalue {min_eigenvalue:.6e})")]
    NegativeNoise { min_eigenvalue: f64 },

    #[error(
        "cross covariance Q_{{X,S|Y}} is singular (min singular value {min_singular_value:.6e})"
    )]
    SingularCross { min_singular_value: f64 },

    #[error("hypothesis violated: {hypothesis} (eigenvalue {eigenvalue:.6e})")]
    HypothesisViolated {
        hypothesis: Hypothesis,
        eigenvalue: f64,
    },

    #[error("{}", below_range_message(*.delta, *.lower, *.at_boundary))]
    BelowRange {
        delta: f64,
        lower: f64,
        at_boundary: bool,
    },

    #[error("water-level bisection did not converge after {iterations} iterations (mass residual {residual:.3e})")]
    BisectionFailed { iterations: usize, residual: f64 },

    #[error("oracle supports n_x = n_s in {{1, 2}}, got n_x = {n_x}, n_s = {n_s}")]
    DimensionUnsupported { n_x: usize, n_s: usize },

    #[error("oracle grid too coarse: only {feasible_points} feasible points")]
    ResolutionTooCoarse { feasible_points: usize },

    #[error("need at least 2 samples to estimate a standard error, got {0}")]
    TooFewSamples(usize),

    #[error("distortion grid is empty")]
    EmptyGrid,

    #[error("distortion grid is not sorted ascending")]
    UnsortedGrid,
}

fn below_range_message(delta: f64, lower: f64, at_boundary: bool) -> String {
    if at_boundary {
        format!("infinite rate at lower boundary (delta {delta} = delta_min {lower})")
    } else {
        format!("distortion {delta} is below the achievable range (delta_min {lower})")
    }
}

impl Error {
    /// Short machine-readable tag used in CSV output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "dimension",
            Error::NonFinite => "non_finite",
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::NotPsd { .. } => "not_psd",
            Error::SingularY { .. } => "singular_y",
            Error::NotNested { .. } => "not_nested",
            Error::InfeasibleSigma(_) => "infeasible_sigma",
            Error::NegativeNoise { .. } => "negative_noise",
            Error::SingularCross { .. } => "singular_cross",
            Error::HypothesisViolated { .. } => "hypothesis_violated",
            Error::BelowRange { .. } => "below_range",
            Error::BisectionFailed { .. } => "bisection_failed",
            Error::DimensionUnsupported { .. } => "dimension_unsupported",
            Error::ResolutionTooCoarse { .. } => "resolution_too_coarse",
            Error::TooFewSamples(_) => "too_few_samples",
            Error::EmptyGrid => "empty_grid",
            Error::UnsortedGrid => "unsorted_grid",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
