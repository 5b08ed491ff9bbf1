use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    Singular { min_eigenvalue: f64 },

    #[error("quadratic form is negative ({0:e})")]
    NegativeQuadraticForm(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance is infeasible")]
    InfeasibleInstance,

    #[error("linear program is unbounded; the domain must be compact")]
    Unbounded,

    #[error("simplex iteration cap ({0}) exceeded")]
    IterationLimit(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("round {round}: action leaves the domain by {excess:e}")]
    ActionOutsideDomain { round: usize, excess: f64 },

    #[error("round {round}: certified action violates the true constraints by {excess:e}")]
    SafetyViolation { round: usize, excess: f64 },

    #[error("elliptical potential bound violated at t={t}: {detail}")]
    EllipticalPotential { t: usize, detail: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("seed {seed}: {source}")]
    Episode {
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
