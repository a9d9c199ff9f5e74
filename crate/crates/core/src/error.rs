use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("eigendecomposition did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("point lies outside the domain (violation {violation:.3e})")]
    OutsideDomain { violation: f64 },
    #[error("reference point is not a fixed point (residual {residual:.3e})")]
    NotFixedPoint { residual: f64 },
    #[error("missing input: {0}")]
    MissingInput(&'static str),
    #[error("local coefficient L_T is infinite")]
    InfiniteLocalCoefficient,
    #[error("no regret bound is available for {0}")]
    NoBound(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn check_finite(v: &[f64], what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
