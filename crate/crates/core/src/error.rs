use std::fmt;

use thiserror::Error;

/// A violated surface-tension condition together with the indices that witness it.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaViolation {
    NotSquare { rows: usize, cols: usize },
    TooFewPhases(usize),
    NonFinite { i: usize, j: usize },
    NotSymmetric { i: usize, j: usize },
    NonZeroDiagonal { i: usize },
    NonPositiveOffDiagonal { i: usize, j: usize },
    TriangleInequality { i: usize, j: usize, l: usize },
    NotConditionallyNegative { max_eigenvalue: f64 },
}

impl fmt::Display for SigmaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Self::TooFewPhases(p) => write!(f, "need at least 2 phases, got {p}"),
            Self::NonFinite { i, j } => write!(f, "entry ({i},{j}) is not finite"),
            Self::NotSymmetric { i, j } => write!(f, "sigma[{i}][{j}] != sigma[{j}][{i}]"),
            Self::NonZeroDiagonal { i } => write!(f, "diagonal entry {i} is nonzero"),
            Self::NonPositiveOffDiagonal { i, j } => {
                write!(f, "off-diagonal entry ({i},{j}) is not positive")
            }
            Self::TriangleInequality { i, j, l } => write!(
                f,
                "triangle inequality violated: sigma[{i}][{j}] > sigma[{i}][{l}] + sigma[{l}][{j}]"
            ),
            Self::NotConditionallyNegative { max_eigenvalue } => write!(
                f,
                "not negative semidefinite on the complement of constants (max eigenvalue {max_eigenvalue:e})"
            ),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("vector is bound to a different graph")]
    GraphMismatch,

    #[error("vertex {vertex} has zero degree")]
    IsolatedVertex { vertex: usize },

    #[error("quadrature did not reach tolerance {requested:e} (estimated error {achieved:e})")]
    QuadratureFailure { requested: f64, achieved: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("tolerance {tol:e} not reached (achieved residual {residual:e})")]
    ToleranceFailure { residual: f64, tol: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { residual: f64, iterations: usize },

    #[error("invalid surface tension: {}", join(.0))]
    SigmaValidation(Vec<SigmaViolation>),

    #[error("invalid label field: {0}")]
    LabelField(String),

    #[error("label {class} at vertex {vertex} is out of range for {classes} classes")]
    LabelOutOfRange { vertex: usize, class: usize, classes: usize },

    #[error("labels required: {0}")]
    MissingLabels(String),

    #[error("unsupported density: {0}")]
    UnsupportedDensity(String),

    #[error("method error: {0}")]
    Method(String),

    #[error("insufficient padding: half-width {actual} < required {required}")]
    Padding { required: f64, actual: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(v: &[SigmaViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Process exit code for the command line front end.
    ///
    /// 0 success, 1 I/O, 2 configuration, 3 numeric, 4 convergence, 5 unknown experiment.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
            Error::Config(_) | Error::MissingLabels(_) | Error::SigmaValidation(_) => 2,
            Error::Convergence { .. } => 4,
            Error::UnknownExperiment(_) => 5,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
