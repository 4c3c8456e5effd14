use statrs::distribution::{ContinuousCDF, Normal};

use super::observable::{estimate_holder_norm, estimate_sup_norm, Observable, DEFAULT_HOLDER_RESOLUTION};
use super::stationary_orbit;
use crate::ensemble::{map_members, mean_stderr, pairwise_sum, EnsembleConfig};
use crate::error::{Error, Result};
use crate::maps::SkewProductSpec;
use crate::ulam::Axis;

/// Relative change of `σ̂²` between `n/2` and `n` above which the estimate is
/// flagged as not converged.
pub const DRIFT_TOLERANCE: f64 = 0.1;

fn check_ensemble(cfg: &EnsembleConfig) -> Result<()> {
    if cfg.size == 0 {
        return Err(Error::EmptyEnsemble);
    }
    Ok(())
}

fn sorted_positive(n_list: &[u64], name: &'static str) -> Result<Vec<u64>> {
    if n_list.is_empty() {
        return Err(Error::param(name, "empty list"));
    }
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    Ok(ns)
}

/// Per-member Birkhoff sums `S_n φ` at each `n` of the sorted list `ns`,
/// plus `φ` at time 0.  Members that hit the critical line are `None`.
fn birkhoff_sums(spec: &SkewProductSpec, phi: &Observable, ns: &[u64], cfg: &EnsembleConfig) -> Vec<Option<(f64, Vec<f64>)>> {
    let n_max = *ns.last().expect("non-empty");
    map_members(cfg.size, |i| {
        let mut orbit = stationary_orbit(spec, cfg.seed, i, cfg.burn_in)?;
        let first = phi.eval(orbit.point());
        let mut out = Vec::with_capacity(ns.len());
        let mut next = ns.iter().peekable();
        while next.peek() == Some(&&0) {
            out.push(0.0);
            next.next();
        }
        let mut sum = 0.0;
        for step in 1..=n_max {
            sum += phi.eval(orbit.point());
            if next.peek() == Some(&&step) {
                out.push(sum);
                next.next();
            }
            if step < n_max {
                orbit.step().ok()?;
            }
        }
        Some((first, out))
    })
}

/// Stationary mean of `φ` from time averages over `steps` steps per member:
/// `(mean, standard error across members)`.
pub fn stationary_mean(spec: &SkewProductSpec, phi: &Observable, cfg: &EnsembleConfig, steps: u64) -> Result<(f64, f64)> {
    check_ensemble(cfg)?;
    if steps == 0 {
        return Err(Error::param("steps", "must be positive"));
    }
    let avgs: Vec<f64> = birkhoff_sums(spec, phi, &[steps], cfg)
        .into_iter()
        .flatten()
        .map(|(_, s)| s[0] / steps as f64)
        .collect();
    if avgs.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(mean_stderr(&avgs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPoint {
    pub n: u64,
    /// `|E[φ·ψ∘Fⁿ] − E[φ]E[ψ]| / (‖φ‖_{H_γ} ‖ψ‖_∞)`.
    pub corr: f64,
    /// The same quantity before taking the absolute value.
    pub signed: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSeries {
    pub points: Vec<CorrelationPoint>,
    pub phi_norm: f64,
    pub psi_sup: f64,
    pub ensemble_size: usize,
    pub excluded: usize,
}

impl CorrelationSeries {
    pub fn at(&self, n: u64) -> Option<&CorrelationPoint> {
        self.points.iter().find(|p| p.n == n)
    }

    /// Exponential decay rate: minus the least-squares slope of `log Cor_n`
    /// against `n` over the points with positive correlation.
    pub fn decay_rate(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .points
            .iter()
            .filter(|p| p.corr > 0.0 && p.n > 0)
            .map(|p| (p.n as f64, p.corr.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let m = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        (sxx > 0.0).then(|| -sxy / sxx)
    }
}

fn centre(values: &[f64]) -> f64 {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return first;
    }
    pairwise_sum(values) / values.len() as f64
}

/// Correlations of several `(φ, ψ)` pairs on one shared stationary ensemble.
pub fn correlation_series_multi(
    spec: &SkewProductSpec,
    pairs: &[(Observable, Observable)],
    n_list: &[u64],
    cfg: &EnsembleConfig,
) -> Result<Vec<CorrelationSeries>> {
    check_ensemble(cfg)?;
    let ns = sorted_positive(n_list, "n_list")?;
    let mut norms = Vec::with_capacity(pairs.len());
    for (phi, psi) in pairs {
        let phi_norm = match phi.holder_norm() {
            Some(n) => n,
            None => estimate_holder_norm(spec, phi, phi.gamma(), DEFAULT_HOLDER_RESOLUTION)?.norm,
        };
        let psi_sup = estimate_sup_norm(spec, psi);
        if !(phi_norm > 0.0) || !(psi_sup > 0.0) {
            return Err(Error::ZeroNorm);
        }
        norms.push((phi_norm, psi_sup));
    }
    let n_max = *ns.last().expect("non-empty");
    let width = 1 + ns.len();
    let rows = map_members(cfg.size, |i| {
        let mut orbit = stationary_orbit(spec, cfg.seed, i, cfg.burn_in)?;
        let mut row = vec![0.0; pairs.len() * width];
        let start = orbit.point();
        for (k, (phi, _)) in pairs.iter().enumerate() {
            row[k * width] = phi.eval(start);
        }
        let mut slot = 0;
        for step in 0..=n_max {
            if step > 0 {
                orbit.step().ok()?;
            }
            while slot < ns.len() && ns[slot] == step {
                let p = orbit.point();
                for (k, (_, psi)) in pairs.iter().enumerate() {
                    row[k * width + 1 + slot] = psi.eval(p);
                }
                slot += 1;
            }
        }
        Some(row)
    });
    let excluded = rows.iter().filter(|r| r.is_none()).count();
    let rows: Vec<Vec<f64>> = rows.into_iter().flatten().collect();
    if rows.len() < 2 {
        return Err(Error::EmptyEnsemble);
    }
    let mut out = Vec::with_capacity(pairs.len());
    for (k, &(phi_norm, psi_sup)) in norms.iter().enumerate() {
        let phi0: Vec<f64> = rows.iter().map(|r| r[k * width]).collect();
        let phi_bar = centre(&phi0);
        let mut points = Vec::with_capacity(ns.len());
        for (slot, &n) in ns.iter().enumerate() {
            let psin: Vec<f64> = rows.iter().map(|r| r[k * width + 1 + slot]).collect();
            let psi_bar = centre(&psin);
            let products: Vec<f64> = phi0
                .iter()
                .zip(&psin)
                .map(|(a, b)| (a - phi_bar) * (b - psi_bar))
                .collect();
            let (cov, se) = mean_stderr(&products);
            let scale = phi_norm * psi_sup;
            points.push(CorrelationPoint {
                n,
                corr: (cov / scale).abs(),
                signed: cov / scale,
                stderr: se / scale,
            });
        }
        out.push(CorrelationSeries {
            points,
            phi_norm,
            psi_sup,
            ensemble_size: rows.len(),
            excluded,
        });
    }
    Ok(out)
}

pub fn correlation_series(
    spec: &SkewProductSpec,
    phi: &Observable,
    psi: &Observable,
    n_list: &[u64],
    cfg: &EnsembleConfig,
) -> Result<CorrelationSeries> {
    let pairs = [(phi.clone(), psi.clone())];
    Ok(correlation_series_multi(spec, &pairs, n_list, cfg)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdPoint {
    pub epsilon: f64,
    pub n: u64,
    /// Fraction of members with `|Sₙφ/n − μ| > ε`.
    pub p: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LdSeries {
    /// Centre `μ` used for the deviations.
    pub mean: f64,
    pub points: Vec<LdPoint>,
    pub ensemble_size: usize,
    pub excluded: usize,
}

/// Large-deviation probabilities for every `(ε, n)` combination on one
/// ensemble.  The centre is the observable's attached mean estimate, or the
/// ensemble average of `S_{n_max}φ/n_max`.
pub fn ld_series(
    spec: &SkewProductSpec,
    phi: &Observable,
    epsilons: &[f64],
    n_list: &[u64],
    cfg: &EnsembleConfig,
) -> Result<LdSeries> {
    check_ensemble(cfg)?;
    if let Some(&e) = epsilons.iter().find(|&&e| !(e > 0.0)) {
        return Err(Error::param("epsilon", format!("{e} must be > 0")));
    }
    let ns = sorted_positive(n_list, "n_list")?;
    if ns[0] == 0 {
        return Err(Error::param("n_list", "n must be positive"));
    }
    let sums = birkhoff_sums(spec, phi, &ns, cfg);
    let excluded = sums.iter().filter(|s| s.is_none()).count();
    let sums: Vec<Vec<f64>> = sums.into_iter().flatten().map(|(_, s)| s).collect();
    if sums.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let last = ns.len() - 1;
    let mean = match phi.mean_estimate() {
        Some((m, _)) => m,
        None => {
            let avgs: Vec<f64> = sums.iter().map(|s| s[last] / ns[last] as f64).collect();
            pairwise_sum(&avgs) / avgs.len() as f64
        }
    };
    let m = sums.len() as f64;
    let mut points = Vec::with_capacity(epsilons.len() * ns.len());
    for &epsilon in epsilons {
        for (slot, &n) in ns.iter().enumerate() {
            let count = sums
                .iter()
                .filter(|s| (s[slot] / n as f64 - mean).abs() > epsilon)
                .count();
            let p = count as f64 / m;
            points.push(LdPoint {
                epsilon,
                n,
                p,
                stderr: (p * (1.0 - p) / m).sqrt(),
            });
        }
    }
    Ok(LdSeries {
        mean,
        points,
        ensemble_size: sums.len(),
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSquared {
    pub mean: f64,
    /// `(n, (1/n) E[(Sₙφ − nμ)²])` at `n/4`, `n/2` and `n`.
    pub levels: Vec<(u64, f64)>,
    pub sigma2: f64,
    /// `|σ̂²_n − σ̂²_{n/2}| / σ̂²_n`.
    pub drift: f64,
    pub flagged: bool,
    pub ensemble_size: usize,
    pub excluded: usize,
}

fn centre_and_variances(sums: &[(f64, Vec<f64>)], ns: &[u64], mean: Option<f64>) -> (f64, Vec<f64>) {
    let last = ns.len() - 1;
    let mean = mean.unwrap_or_else(|| {
        let avgs: Vec<f64> = sums.iter().map(|(_, s)| s[last] / ns[last] as f64).collect();
        pairwise_sum(&avgs) / avgs.len() as f64
    });
    let vars = ns
        .iter()
        .enumerate()
        .map(|(slot, &n)| {
            let sq: Vec<f64> = sums
                .iter()
                .map(|(_, s)| {
                    let c = s[slot] - n as f64 * mean;
                    c * c / n as f64
                })
                .collect();
            pairwise_sum(&sq) / sq.len() as f64
        })
        .collect();
    (mean, vars)
}

/// Truncated variance estimate `σ̂²` of the Birkhoff sums of `φ`.
pub fn sigma_squared(spec: &SkewProductSpec, phi: &Observable, n_trunc: u64, cfg: &EnsembleConfig) -> Result<SigmaSquared> {
    check_ensemble(cfg)?;
    if n_trunc < 4 {
        return Err(Error::param("n_trunc", format!("{n_trunc} < 4")));
    }
    let ns = [n_trunc / 4, n_trunc / 2, n_trunc];
    let sums = birkhoff_sums(spec, phi, &ns, cfg);
    let excluded = sums.iter().filter(|s| s.is_none()).count();
    let sums: Vec<(f64, Vec<f64>)> = sums.into_iter().flatten().collect();
    if sums.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let (mean, vars) = centre_and_variances(&sums, &ns, phi.mean_estimate().map(|m| m.0));
    let sigma2 = vars[2];
    let drift = if sigma2 > 0.0 {
        (sigma2 - vars[1]).abs() / sigma2
    } else if vars[1] == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(SigmaSquared {
        mean,
        levels: ns.iter().copied().zip(vars).collect(),
        sigma2,
        drift,
        flagged: drift > DRIFT_TOLERANCE,
        ensemble_size: sums.len(),
        excluded,
    })
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and a
/// continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let m = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(((i + 1) as f64 / m - f).abs()).max((f - i as f64 / m).abs())
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CltPoint {
    pub n: u64,
    pub sigma2: f64,
    /// KS distance of `(Sₙφ − nμ)/√n` to `N(0, σ̂²ₙ)`; NaN when `σ̂²ₙ = 0`.
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltDiagnostic {
    pub mean: f64,
    /// Single-time variance of `φ` under the stationary ensemble.
    pub variance: f64,
    pub points: Vec<CltPoint>,
    /// `σ̂² ≤ 10⁻² Var φ` at the largest `n`: the limit law is degenerate.
    pub degenerate: bool,
    /// Slope of `log KS` against `log n` (Berry–Esseen rate is −1/2).
    pub be_slope: Option<f64>,
    pub ensemble_size: usize,
    pub excluded: usize,
}

pub fn clt_diagnostic(spec: &SkewProductSpec, phi: &Observable, n_list: &[u64], cfg: &EnsembleConfig) -> Result<CltDiagnostic> {
    check_ensemble(cfg)?;
    let ns = sorted_positive(n_list, "n_list")?;
    if ns[0] == 0 {
        return Err(Error::param("n_list", "n must be positive"));
    }
    let sums = birkhoff_sums(spec, phi, &ns, cfg);
    let excluded = sums.iter().filter(|s| s.is_none()).count();
    let sums: Vec<(f64, Vec<f64>)> = sums.into_iter().flatten().collect();
    if sums.len() < 2 {
        return Err(Error::EmptyEnsemble);
    }
    let (mean, vars) = centre_and_variances(&sums, &ns, phi.mean_estimate().map(|m| m.0));
    let firsts: Vec<f64> = sums.iter().map(|s| s.0).collect();
    let (m0, _) = mean_stderr(&firsts);
    let sq: Vec<f64> = firsts.iter().map(|v| (v - m0) * (v - m0)).collect();
    let variance = pairwise_sum(&sq) / sq.len() as f64;

    let mut points = Vec::with_capacity(ns.len());
    for (slot, &n) in ns.iter().enumerate() {
        let sigma2 = vars[slot];
        let ks = if sigma2 > 0.0 {
            let z: Vec<f64> = sums
                .iter()
                .map(|(_, s)| (s[slot] - n as f64 * mean) / (n as f64).sqrt())
                .collect();
            let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|_| Error::DegenerateVariance(sigma2))?;
            ks_statistic(&z, |x| normal.cdf(x))
        } else {
            f64::NAN
        };
        points.push(CltPoint { n, sigma2, ks });
    }
    let degenerate = vars[ns.len() - 1] <= 1e-2 * variance || variance == 0.0;
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.ks > 0.0)
        .map(|p| ((p.n as f64).ln(), p.ks.ln()))
        .collect();
    let be_slope = (logs.len() >= 2).then(|| {
        let m = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        sxy / sxx
    });
    Ok(CltDiagnostic {
        mean,
        variance,
        points,
        degenerate,
        be_slope,
        ensemble_size: sums.len(),
        excluded,
    })
}

/// Histogram density of the stationary measure on `base × J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Acip2d {
    pub theta: Axis,
    pub x: Axis,
    /// Row-major by `θ` cell; integrates to 1.
    pub density: Vec<f64>,
    pub samples: usize,
    /// Members dropped after a singular hit.
    pub dropped: usize,
}

impl Acip2d {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.density[i * self.x.cells + j]
    }

    pub fn total_mass(&self) -> f64 {
        let cell = self.theta.width() * self.x.width();
        pairwise_sum(&self.density) * cell
    }

    /// Density of the `θ` marginal per `θ` cell.
    pub fn theta_marginal(&self) -> Vec<f64> {
        (0..self.theta.cells)
            .map(|i| (0..self.x.cells).map(|j| self.value(i, j)).sum::<f64>() * self.x.width())
            .collect()
    }
}

pub fn empirical_acip(
    spec: &SkewProductSpec,
    samples: usize,
    burn_in: u64,
    bins: (usize, usize),
    seed: u64,
) -> Result<Acip2d> {
    if burn_in < 1_000 {
        return Err(Error::param("burn_in", format!("{burn_in} < 1000")));
    }
    if samples == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if bins.0 == 0 || bins.1 == 0 {
        return Err(Error::param("bins", "must be positive"));
    }
    let (t_lo, t_hi) = spec.base_domain();
    let (j_lo, j_hi) = spec.fiber_interval();
    let theta = Axis::new(t_lo, t_hi, bins.0);
    let x = Axis::new(j_lo, j_hi, bins.1);
    let cells = map_members(samples, |i| {
        let orbit = stationary_orbit(spec, seed, i, burn_in)?;
        let p = orbit.point();
        Some(theta.locate(p.theta)? * bins.1 + x.locate(p.x)?)
    });
    let mut counts = vec![0u64; bins.0 * bins.1];
    let mut used = 0usize;
    for c in cells.iter().flatten() {
        counts[*c] += 1;
        used += 1;
    }
    if used == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let norm = 1.0 / (used as f64 * theta.width() * x.width());
    Ok(Acip2d {
        density: counts.iter().map(|&c| c as f64 * norm).collect(),
        theta,
        x,
        samples: used,
        dropped: samples - used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_f1, DEFAULT_MISIUREWICZ_A};

    fn f1() -> SkewProductSpec {
        make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 2.0).unwrap()
    }

    fn cfg(size: usize) -> EnsembleConfig {
        EnsembleConfig::new(7, size).with_burn_in(200)
    }

    #[test]
    fn constant_observable_has_no_correlation() {
        let s = f1();
        let c = correlation_series(&s, &Observable::constant(1.0), &Observable::cos_theta(), &[1, 3], &cfg(500)).unwrap();
        assert!(c.points.iter().all(|p| p.corr == 0.0));
    }

    #[test]
    fn zero_observable_is_rejected() {
        let s = f1();
        let r = correlation_series(&s, &Observable::constant(0.0), &Observable::fiber(), &[1], &cfg(10));
        assert!(matches!(r, Err(Error::ZeroNorm)));
    }

    #[test]
    fn correlation_is_scale_invariant() {
        let s = f1();
        let (phi, psi) = (Observable::generic(), Observable::fiber());
        let a = correlation_series(&s, &phi, &psi, &[1, 2, 5], &cfg(400)).unwrap();
        let b = correlation_series(&s, &phi.scaled(4.0), &psi, &[1, 2, 5], &cfg(400)).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.corr, q.corr);
        }
    }

    #[test]
    fn ld_is_antitone_in_epsilon() {
        let s = f1();
        let ld = ld_series(&s, &Observable::generic(), &[0.01, 0.05, 0.2], &[50, 100], &cfg(300)).unwrap();
        for n in [50, 100] {
            let ps: Vec<f64> = ld.points.iter().filter(|p| p.n == n).map(|p| p.p).collect();
            assert!(ps.windows(2).all(|w| w[0] >= w[1]), "{ps:?}");
        }
    }

    #[test]
    fn ks_matches_brute_force() {
        let xs = [0.3, -1.2, 0.7, 2.1, -0.4, 0.0, 1.5];
        let normal = Normal::new(0.0, 1.0).unwrap();
        let fast = ks_statistic(&xs, |x| normal.cdf(x));
        let m = xs.len() as f64;
        let mut brute = 0.0f64;
        for &x in &xs {
            let below = xs.iter().filter(|&&y| y < x).count() as f64 / m;
            let upto = xs.iter().filter(|&&y| y <= x).count() as f64 / m;
            brute = brute.max((upto - normal.cdf(x)).abs()).max((below - normal.cdf(x)).abs());
        }
        assert!((fast - brute).abs() < 1e-15);
    }

    #[test]
    fn coboundary_variance_vanishes() {
        let s = f1();
        let cob = Observable::coboundary(&s, &Observable::fiber());
        let v = sigma_squared(&s, &cob, 2_000, &cfg(200)).unwrap();
        assert!(v.sigma2 < 0.01, "{v:?}");
    }

    #[test]
    fn acip_theta_marginal_is_uniform() {
        let s = f1();
        let acip = empirical_acip(&s, 100_000, 1_000, (16, 8), 3).unwrap();
        assert!((acip.total_mass() - 1.0).abs() < 1e-12);
        let l1: f64 = acip.theta_marginal().iter().map(|d| (d - 1.0).abs() / 16.0).sum();
        assert!(l1 < 0.02, "{l1}");
        assert!(empirical_acip(&s, 10, 999, (4, 4), 3).is_err());
    }
}
