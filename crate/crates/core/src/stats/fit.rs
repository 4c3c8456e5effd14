//! Stretched-exponential fits `p_n ≈ C·exp(−τ n^ζ)`.
//!
//! The constant is profiled out: for a trial `u = log C` the model is the
//! line `log(u − log p) = log τ + ζ log n`, solved by least squares, and `u`
//! minimizes the squared error of the resulting model in `log p` (coarse log
//! grid, then golden section).  The error in the linearized coordinates is
//! not comparable across `u` and would drift towards `C → ∞`.

use rand::Rng;

use crate::ensemble::member_rng;
use crate::error::{Error, Result};

pub const P_MIN: f64 = 1e-6;
pub const P_MAX: f64 = 0.9;
const MIN_POINTS: usize = 4;
const OFFSET_MIN: f64 = 1e-9;
const OFFSET_MAX: f64 = 40.0;
const COARSE: usize = 400;
pub const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct StretchedExpFit {
    pub c_hat: f64,
    pub tau_hat: f64,
    pub zeta_hat: f64,
    /// Coefficient of determination of the linearized regression.
    pub r2: f64,
    /// Coefficient of determination of the fitted model for `log p`.
    pub r2_log: f64,
    /// Range of `n` actually used.
    pub window: (f64, f64),
    pub points: usize,
    /// 95% bootstrap interval for `ζ̂`.
    pub zeta_ci: Option<(f64, f64)>,
}

impl StretchedExpFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.c_hat * (-self.tau_hat * n.powf(self.zeta_hat)).exp()
    }
}

struct Line {
    intercept: f64,
    slope: f64,
    r2: f64,
}

fn regress(xs: &[f64], ys: &[f64]) -> Option<Line> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Some(Line { intercept, slope, r2 })
}

/// Selects the points usable for fitting: `p ∈ (1e−6, 0.9)` and `n > 0`
/// inside the optional window.
pub fn select_points(ns: &[f64], ps: &[f64], window: Option<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    ns.iter()
        .zip(ps)
        .filter(|(&n, &p)| {
            n > 0.0 && p > P_MIN && p < P_MAX && window.is_none_or(|(lo, hi)| n >= lo && n <= hi)
        })
        .map(|(&n, &p)| (n, p))
        .unzip()
}

/// Fit on already selected points (real-valued `n`).
pub fn fit_points(ns: &[f64], ps: &[f64]) -> Result<StretchedExpFit> {
    if ns.len() != ps.len() {
        return Err(Error::Unfittable("length mismatch".into()));
    }
    if ns.len() < MIN_POINTS {
        return Err(Error::Unfittable(format!("{} usable points, need {MIN_POINTS}", ns.len())));
    }
    let log_p: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let log_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let top = log_p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bottom = log_p.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(top > bottom) {
        return Err(Error::Unfittable("constant curve".into()));
    }
    if log_n.iter().all(|&x| x == log_n[0]) {
        return Err(Error::Unfittable("single n value".into()));
    }

    let mut ys = vec![0.0; ns.len()];
    let mut objective = |offset: f64| -> f64 {
        let u = top + offset;
        for (y, lp) in ys.iter_mut().zip(&log_p) {
            *y = (u - lp).ln();
        }
        regress(&log_n, &ys).map_or(f64::INFINITY, |l| {
            let tau = l.intercept.exp();
            ns.iter()
                .zip(&log_p)
                .map(|(n, lp)| (lp - u + tau * n.powf(l.slope)).powi(2))
                .sum()
        })
    };

    let ratio = (OFFSET_MAX / OFFSET_MIN).ln();
    let grid: Vec<f64> = (0..COARSE)
        .map(|i| OFFSET_MIN * (ratio * i as f64 / (COARSE - 1) as f64).exp())
        .collect();
    let values: Vec<f64> = grid.iter().map(|&o| objective(o)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid[(best + 1).min(COARSE - 1)];
    let offset = golden_section(&mut objective, lo.max(f64::MIN_POSITIVE), hi);

    let u = top + offset;
    let ys: Vec<f64> = log_p.iter().map(|lp| (u - lp).ln()).collect();
    let line = regress(&log_n, &ys).ok_or_else(|| Error::Unfittable("degenerate regression".into()))?;
    let window = (
        ns.iter().cloned().fold(f64::INFINITY, f64::min),
        ns.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    let (tau, zeta) = (line.intercept.exp(), line.slope);
    let mean_lp = log_p.iter().sum::<f64>() / log_p.len() as f64;
    let sst: f64 = log_p.iter().map(|lp| (lp - mean_lp).powi(2)).sum();
    let sse: f64 = ns
        .iter()
        .zip(&log_p)
        .map(|(n, lp)| (lp - (u - tau * n.powf(zeta))).powi(2))
        .sum();
    Ok(StretchedExpFit {
        c_hat: u.exp(),
        tau_hat: tau,
        zeta_hat: zeta,
        r2: line.r2,
        r2_log: 1.0 - sse / sst,
        window,
        points: ns.len(),
        zeta_ci: None,
    })
}

fn golden_section(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..300 {
        if (b - a) <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Fit with a 95% pairs-bootstrap interval for `ζ̂`.
pub fn fit_stretched_exp_points(
    ns: &[f64],
    ps: &[f64],
    window: Option<(f64, f64)>,
    seed: u64,
) -> Result<StretchedExpFit> {
    let (sn, sp) = select_points(ns, ps, window);
    let mut fit = fit_points(&sn, &sp)?;
    let mut rng = member_rng(seed, 0xb007);
    let mut zetas = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let m = sn.len();
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let idx: Vec<usize> = (0..m).map(|_| rng.random_range(0..m)).collect();
        let bn: Vec<f64> = idx.iter().map(|&i| sn[i]).collect();
        let bp: Vec<f64> = idx.iter().map(|&i| sp[i]).collect();
        if let Ok(f) = fit_points(&bn, &bp) {
            zetas.push(f.zeta_hat);
        }
    }
    if zetas.len() >= 20 {
        zetas.sort_by(f64::total_cmp);
        let q = |t: f64| zetas[((t * (zetas.len() - 1) as f64).round() as usize).min(zetas.len() - 1)];
        fit.zeta_ci = Some((q(0.025), q(0.975)));
    }
    Ok(fit)
}

/// `log p = log C − τ n^ζ` with `ζ` fixed: the comparison envelopes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub c: f64,
    pub tau: f64,
    pub zeta: f64,
}

impl EnvelopeFit {
    pub fn eval(&self, n: f64) -> f64 {
        self.c * (-self.tau * n.powf(self.zeta)).exp()
    }
}

pub fn fit_fixed_exponent(ns: &[f64], ps: &[f64], zeta: f64) -> Result<EnvelopeFit> {
    let (sn, sp) = select_points(ns, ps, None);
    if sn.len() < 2 {
        return Err(Error::Unfittable(format!("{} usable points, need 2", sn.len())));
    }
    let xs: Vec<f64> = sn.iter().map(|n| n.powf(zeta)).collect();
    let ys: Vec<f64> = sp.iter().map(|p| p.ln()).collect();
    let line = regress(&xs, &ys).ok_or_else(|| Error::Unfittable("single n value".into()))?;
    Ok(EnvelopeFit {
        c: line.intercept.exp(),
        tau: -line.slope,
        zeta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(c: f64, tau: f64, zeta: f64, ns: &[f64]) -> Vec<f64> {
        ns.iter().map(|n| c * (-tau * n.powf(zeta)).exp()).collect()
    }

    #[test]
    fn cube_root_inverse() {
        let ns: Vec<f64> = (1..=400).map(f64::from).collect();
        let ps = synth(1.0, 2.0, 1.0 / 3.0, &ns);
        let (sn, sp) = select_points(&ns, &ps, None);
        let f = fit_points(&sn, &sp).unwrap();
        assert!((f.tau_hat - 2.0).abs() < 1e-6, "{f:?}");
        assert!((f.zeta_hat - 1.0 / 3.0).abs() < 1e-6, "{f:?}");
    }

    #[test]
    fn inverts_model_grid() {
        for &tau in &[0.1, 0.3, 1.0, 2.5, 5.0] {
            for &zeta in &[0.1, 0.2, 1.0 / 3.0, 0.6, 1.0] {
                for &c in &[0.5, 1.0, 1.7] {
                    let ns: Vec<f64> = (0..40)
                        .map(|i| {
                            let t = 0.25 * (12.0f64 / 0.25).powf(i as f64 / 39.0);
                            (t / tau).powf(1.0 / zeta)
                        })
                        .collect();
                    let ps = synth(c, tau, zeta, &ns);
                    let (sn, sp) = select_points(&ns, &ps, None);
                    let f = fit_points(&sn, &sp).unwrap();
                    assert!((f.tau_hat - tau).abs() < 1e-6, "{tau} {zeta} {c}: {f:?}");
                    assert!((f.zeta_hat - zeta).abs() < 1e-6, "{tau} {zeta} {c}: {f:?}");
                    assert!((f.c_hat - c).abs() < 1e-6, "{tau} {zeta} {c}: {f:?}");
                }
            }
        }
    }

    #[test]
    fn pure_exponential() {
        let ns: Vec<f64> = (1..=12).map(f64::from).collect();
        let ps = synth(1.0, 1.0, 1.0, &ns);
        let (sn, sp) = select_points(&ns, &ps, None);
        let f = fit_points(&sn, &sp).unwrap();
        assert!((f.zeta_hat - 1.0).abs() < 1e-6, "{f:?}");
    }

    #[test]
    fn constant_curve_is_unfittable() {
        let ns: Vec<f64> = (1..=10).map(f64::from).collect();
        let ps = vec![0.5; 10];
        assert!(matches!(fit_points(&ns, &ps), Err(Error::Unfittable(_))));
        assert!(matches!(fit_points(&ns[..3], &ps[..3]), Err(Error::Unfittable(_))));
    }

    #[test]
    fn fixed_exponent_recovers_envelope() {
        let ns: Vec<f64> = (1..=50).map(|i| 10.0 * i as f64).collect();
        let ps = synth(0.8, 0.7, 1.0 / 7.0, &ns);
        let e = fit_fixed_exponent(&ns, &ps, 1.0 / 7.0).unwrap();
        assert!((e.tau - 0.7).abs() < 1e-9 && (e.c - 0.8).abs() < 1e-9);
    }
}
