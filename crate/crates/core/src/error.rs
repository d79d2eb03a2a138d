use thiserror::Error;

/// Errors raised by the simulation and design toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("spin index {index} out of range for a {n_spins}-spin system")]
    SpinIndexOutOfRange { index: usize, n_spins: usize },

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    /// An eigenvalue sits on the branch cut of the principal logarithm.
    #[error("eigenvalue {distance:.3e} away from -1 lies on the logarithm branch cut")]
    BranchCut { distance: f64 },

    #[error("eigen-solver failed to converge")]
    EigenSolver,

    #[error("time step {dt:.3e} s too coarse: must be at most {max_dt:.3e} s")]
    StepTooCoarse { dt: f64, max_dt: f64 },

    /// A correlation is undefined because one traceless part vanishes.
    #[error("undefined correlation: traceless part of {0} is zero")]
    ZeroTracelessPart(&'static str),

    #[error("no discernible peak in nutation spectrum")]
    NoSpectralPeak,

    #[error("rescaled distribution has non-positive scale {0}")]
    NonPositiveScale(f64),

    #[error("distribution is not symmetric about its mean")]
    AsymmetricProfile,

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("insufficient samples: need {needed} distinct values, found {found}")]
    InsufficientSamples { needed: usize, found: usize },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
