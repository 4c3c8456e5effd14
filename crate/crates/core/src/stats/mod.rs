//! Statistical estimators on ensembles of refreshed orbits: observables and
//! Hölder norms, tail curves of the expansion/recurrence times, decay of
//! correlations, large deviations, the CLT variance and stretched-exponential
//! fits.

mod fit;
mod observable;
mod series;
mod tails;

pub use fit::{
    fit_fixed_exponent, fit_points, fit_stretched_exp_points, select_points, EnvelopeFit, StretchedExpFit,
    BOOTSTRAP_RESAMPLES, P_MAX, P_MIN,
};
pub use observable::{
    estimate_holder_norm, estimate_sup_norm, phi_value, HolderEstimate, Observable, DEFAULT_HOLDER_RESOLUTION,
};
pub use series::{
    clt_diagnostic, correlation_series, correlation_series_multi, empirical_acip, ks_statistic, ld_series,
    sigma_squared, stationary_mean, Acip2d, CltDiagnostic, CltPoint, CorrelationPoint, CorrelationSeries, LdPoint,
    LdSeries, SigmaSquared, DRIFT_TOLERANCE,
};
pub use tails::{fit_stretched_exp, tail_curves, TailCurve, TailKind, TailParams};

use crate::ensemble::member_rng;
use crate::maps::SkewProductSpec;
use crate::orbit::Orbit;

/// Lebesgue-started refreshed orbit of member `i` after `burn_in` steps, or
/// `None` when it hits the critical line on the way.
pub(crate) fn stationary_orbit(spec: &SkewProductSpec, seed: u64, i: u64, burn_in: u64) -> Option<Orbit<'_>> {
    let mut orbit = Orbit::lebesgue(spec, member_rng(seed, i));
    orbit.advance(burn_in).ok()?;
    Some(orbit)
}
