use crate::connect::HomologyClass;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(&'static str),
    #[error("profile is not positive: minimum {min} at y = {at}")]
    NonPositiveProfile { min: f64, at: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("step size underflow at t = {t} (tolerance cannot be met)")]
    StepFailure { t: f64 },
    #[error("trace does not close up: residual {residual:e}")]
    NotPeriodic { residual: f64 },
    #[error("shooting did not converge: best miss {best_miss:e}")]
    NoConvergence { best_miss: f64 },
    #[error("class {0} is not prime")]
    NotPrime(HomologyClass),
    #[error("displacement norm {0:e} below tolerance")]
    ZeroDisplacement(f64),
    #[error("requested t = {t} exceeds the ray horizon {horizon}")]
    HorizonExceeded { t: f64, horizon: f64 },
    #[error("no joining geodesic found for n = {n}")]
    MissingGeodesic { n: i64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(&'static str),
    #[error("tangential crossing at angle {angle:e} rad")]
    TangencyDetected { angle: f64 },
    #[error("no admissible cylinder: {0}")]
    NoCylinder(&'static str),
}
