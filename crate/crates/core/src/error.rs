use thiserror::Error;

use crate::horner::ConvergenceTrace;
use crate::qd::QdTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular: pivot {pivot} has magnitude {magnitude:e}")]
    SingularMatrix { pivot: usize, magnitude: f64 },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("eigenvalue iteration did not converge after {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("polynomial is not monic (leading coefficient is not the identity)")]
    NotMonic,

    #[error("polynomial degree {degree} is too low for this operation")]
    DegreeTooLow { degree: usize },

    #[error("coefficient A_{0} is singular; the quotient-difference table cannot be initialised")]
    SingularCoefficient(usize),

    #[error("singular pivot Q_{block} in sweep {sweep}")]
    SingularPivot { sweep: usize, block: usize },

    #[error("quotient-difference iteration stopped after {sweeps} sweeps without convergence")]
    QdNoConvergence { sweeps: usize, trace: Box<QdTrace> },

    #[error("{method} did not converge within {iterations} iterations")]
    NoConvergence {
        method: &'static str,
        iterations: usize,
        trace: Box<ConvergenceTrace>,
    },

    #[error("iteration {iteration}: step matrix is singular")]
    SingularStep { iteration: usize },

    #[error("iteration {iteration}: Frechet matrix is singular")]
    SingularFrechet { iteration: usize },

    #[error("trailing coefficient A_l is singular")]
    SingularALast,

    #[error("iteration {iteration}: step stalled with relative residual {residual:e}")]
    StagnantWithoutResidual { iteration: usize, residual: f64 },

    #[error("trace has {len} iterates; at least {needed} are required")]
    InsufficientTrace { len: usize, needed: usize },

    #[error("Kronecker system for the similarity transformer is singular")]
    SingularKroneckerSystem,

    #[error("similarity transformer is rank deficient")]
    RankDeficientQ,

    #[error("input is not a solvent: relative residual {residual:e}")]
    InputNotSolvent { residual: f64 },

    #[error("transformer N_{0} is rank deficient")]
    RankDeficientTransformer(usize),

    #[error("solvent set has {found} members, expected {expected}")]
    IncompleteSet { expected: usize, found: usize },

    #[error("Kronecker matrix G_{0} is rank deficient")]
    RankDeficientG(usize),

    #[error("deflation step {step} left relative remainder {residual:e}")]
    DeflationResidualLarge { step: usize, residual: f64 },

    #[error("spectra of factors {first} and {second} overlap")]
    SpectrumOverlap { first: usize, second: usize },

    #[error("divisor is not a solvent: relative remainder {residual:e}")]
    ResidualTooLarge { residual: f64 },

    #[error("leading numerator coefficient is singular")]
    SingularLeadingCoefficient,

    #[error("numerator factorization failed: {0}")]
    NumeratorFactorizationFailed(Box<Error>),

    #[error("closed loop is singular at lambda = {re} + {im}i")]
    SingularAtLambda { re: f64, im: f64 },

    #[error("stage {stage}: {source}")]
    Stage { stage: usize, source: Box<Error> },

    #[error("file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of a numerical procedure, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::DimensionMismatch { .. }
            | Error::NonFinite { .. }
            | Error::InvalidInput(_)
            | Error::NotMonic
            | Error::DegreeTooLow { .. }
            | Error::IncompleteSet { .. }
            | Error::Format(_)
            | Error::Io(_)
            | Error::Json(_) => false,
            Error::Stage { source, .. } => source.is_numerical(),
            _ => true,
        }
    }

    pub(crate) fn at_stage(self, stage: usize) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
