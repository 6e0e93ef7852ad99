use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("frame invalid: {0}")]
    FrameInvalid(String),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("endomorphism is not symmetric with respect to the metric (residual {0:e})")]
    NotSymmetric(f64),
    #[error("endomorphism does not commute with the complex structure (residual {0:e})")]
    NotJCommuting(f64),
    #[error("linear map is not J-linear (residual {0:e})")]
    NotJLinear(f64),
    #[error("linear map is singular")]
    SingularMap,
    #[error("eigen-decomposition did not converge after {0} sweeps")]
    NoConvergence(usize),
    #[error("point {0:?} lies outside the chart domain")]
    OutsideDomain(Vec<f64>),
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("unknown chart name `{0}`")]
    UnknownName(String),
    #[error("unsupported complex dimension {n} for {what}")]
    UnsupportedDimension { what: String, n: usize },
    #[error("potential is not real: coefficient of {0} is not the conjugate of its mirror")]
    NonRealPotential(String),
    #[error("inconsistent curvature bundle: {0}")]
    InconsistentBundle(String),
    #[error("random draw degenerate after {0} attempts")]
    DegenerateDraw(usize),
    #[error("Bochner tensor vanishes")]
    BochnerFlat,
    #[error("probe search failed: best |B(x,Jy)| = {best:e} below threshold {threshold:e}")]
    ProbeSearchFailed { best: f64, threshold: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}
