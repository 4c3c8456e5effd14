use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("point lies on the singular set")]
    OnSingularity,

    #[error("orbit hit the singular set at step {step}")]
    SingularHit { step: u64 },

    #[error("trapping interval validation failed: {0}")]
    TrappingFailed(String),

    #[error("no sign change of the Misiurewicz condition on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("parameter {0} rejected: the full quadratic map a = 2 is excluded")]
    FullQuadratic(f64),

    #[error("parameter {0} rejected: critical orbit is periodic")]
    PeriodicCriticalOrbit(f64),

    #[error("parameter {0} rejected: empirical acip does not fill [Q²(0), Q(0)] ({1} empty bins)")]
    Renormalizable(f64, usize),

    #[error("coupling exceeds [-1, 1]: sup |s| = {0}")]
    CouplingRange(f64),

    #[error("monotone branch enumeration failed on [{lo}, {hi}]")]
    BranchEnumeration { lo: f64, hi: f64 },

    #[error("observable has zero norm")]
    ZeroNorm,

    #[error("degenerate variance: sigma^2 = {0}")]
    DegenerateVariance(f64),

    #[error("curve is unfittable: {0}")]
    Unfittable(String),

    #[error("every ensemble member hit the singular set")]
    EmptyEnsemble,
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
