//! The quadratic family `Q_a(x) = a − x²` and the geometric preprocessing
//! built on it: Misiurewicz parameter search, trapping intervals and the
//! critical points of `Q_b^k`.

use crate::error::{Error, Result};

/// Parameter with `Q_a³(0)` on the positive fixed point (root of
/// `a³ − 2a² + 2a − 2`).
pub const DEFAULT_MISIUREWICZ_A: f64 = 1.543_689_012_692_076_4;

#[inline]
pub fn quadratic(a: f64, x: f64) -> f64 {
    a - x * x
}

pub fn quadratic_iterate(a: f64, x: f64, n: u32) -> f64 {
    (0..n).fold(x, |x, _| quadratic(a, x))
}

/// Derivative of `Q_b^n` at `x` (chain rule product of `−2 Q_b^j(x)`).
pub fn quadratic_iterate_derivative(b: f64, x: f64, n: u32) -> f64 {
    let mut y = x;
    let mut d = 1.0;
    for _ in 0..n {
        d *= -2.0 * y;
        y = quadratic(b, y);
    }
    d
}

/// Negative fixed point `p` of `Q_a`.
pub fn negative_fixed_point(a: f64) -> f64 {
    -(1.0 + (1.0 + 4.0 * a).sqrt()) / 2.0
}

/// `g(a) = Q_a^{m+p}(0) − Q_a^m(0)`.
pub fn misiurewicz_residual(a: f64, preperiod: u32, period: u32) -> f64 {
    let head = quadratic_iterate(a, 0.0, preperiod);
    quadratic_iterate(a, head, period) - head
}

#[derive(Debug, Clone, PartialEq)]
pub struct MisiurewiczParameter {
    pub a: f64,
    pub residual: f64,
    pub preperiod: u32,
    pub period: u32,
    /// `Q_a^j(0)` for `j = 0..=m+p`.
    pub critical_orbit: Vec<f64>,
}

const FULL_MAP_TOL: f64 = 1e-9;
const PERIODIC_TOL: f64 = 1e-9;
const SUPPORT_BINS: usize = 256;
const SUPPORT_STEPS: usize = 2_000_000;

/// Bisection for a pre-periodic critical orbit, followed by the
/// admissibility checks: not the full map, critical point not periodic,
/// empirical acip filling `[Q_a²(0), Q_a(0)]`.
pub fn find_misiurewicz(
    bracket: (f64, f64),
    preperiod: u32,
    period: u32,
) -> Result<MisiurewiczParameter> {
    if period == 0 {
        return Err(Error::param("period", "must be at least 1"));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::param("bracket", "lower end must be below upper end"));
    }
    let mut g_lo = misiurewicz_residual(lo, preperiod, period);
    let g_hi = misiurewicz_residual(hi, preperiod, period);
    if g_lo == 0.0 || g_hi == 0.0 {
        let a = if g_lo == 0.0 { lo } else { hi };
        return check_misiurewicz(a, preperiod, period);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = misiurewicz_residual(mid, preperiod, period);
        if g_mid == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if g_mid.signum() == g_lo.signum() {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    let a = if misiurewicz_residual(lo, preperiod, period).abs()
        <= misiurewicz_residual(hi, preperiod, period).abs()
    {
        lo
    } else {
        hi
    };
    check_misiurewicz(a, preperiod, period)
}

fn check_misiurewicz(a: f64, preperiod: u32, period: u32) -> Result<MisiurewiczParameter> {
    if (a - 2.0).abs() < FULL_MAP_TOL {
        return Err(Error::FullQuadratic(a));
    }
    if !(a > 0.0 && a < 2.0) {
        return Err(Error::param("a", format!("{a} outside (0, 2)")));
    }
    let mut orbit = Vec::with_capacity((preperiod + period + 1) as usize);
    let mut x = 0.0;
    orbit.push(x);
    for _ in 0..preperiod + period {
        x = quadratic(a, x);
        orbit.push(x);
    }
    if orbit[1..].iter().any(|v| v.abs() < PERIODIC_TOL) {
        return Err(Error::PeriodicCriticalOrbit(a));
    }
    let empty = acip_support_gaps(a, SUPPORT_BINS, SUPPORT_STEPS);
    if empty > 0 {
        return Err(Error::Renormalizable(a, empty));
    }
    Ok(MisiurewiczParameter {
        a,
        residual: misiurewicz_residual(a, preperiod, period),
        preperiod,
        period,
        critical_orbit: orbit,
    })
}

/// Number of empty histogram bins of a long `Q_a` orbit over
/// `[Q_a²(0), Q_a(0)]`; zero means the empirical acip fills the core.
pub fn acip_support_gaps(a: f64, bins: usize, steps: usize) -> usize {
    let lo = quadratic(a, a);
    let hi = a;
    let width = hi - lo;
    let mut counts = vec![0u32; bins];
    // irrational-ish start off any preperiodic orbit
    let mut x = lo + width * std::f64::consts::FRAC_1_PI;
    for _ in 0..1000 {
        x = quadratic(a, x);
    }
    for _ in 0..steps {
        x = quadratic(a, x);
        let idx = (((x - lo) / width) * bins as f64).floor();
        if idx >= 0.0 && (idx as usize) < bins {
            counts[idx as usize] += 1;
        }
    }
    counts.iter().filter(|&&c| c == 0).count()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrappingInterval {
    /// Negative fixed point of `Q_a`.
    pub p: f64,
    pub interval: (f64, f64),
    /// Invariance clearance `min(image_lo − lo, hi − image_hi)`.
    pub margin: f64,
}

impl TrappingInterval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.interval.0 && x <= self.interval.1
    }

    pub fn width(&self) -> f64 {
        self.interval.1 - self.interval.0
    }
}

const TRAP_GRID: usize = 1_000_000;

/// Builds a fiber interval `J = [lo, hi]` with
/// `Q_a(J) + α·[s_lo, s_hi] ⊂ J`, placed around the core `[Q_a²(0), Q_a(0)]`.
///
/// An interval containing `[p, −p]` cannot be invariant for `α > 0`: the
/// image of `±R`, `R ≥ |p|`, lies below `−R`.
pub fn trapping_interval(a: f64, alpha: f64, coupling_range: (f64, f64)) -> Result<TrappingInterval> {
    if !(a > 0.0 && a < 2.0) {
        return Err(Error::param("a", format!("{a} outside (0, 2)")));
    }
    if !(alpha > 0.0) {
        return Err(Error::param("alpha", "coupling strength must be positive"));
    }
    let (s_lo, s_hi) = coupling_range;
    let slack = (alpha / 10.0).max(1e-9);
    let hi = a + alpha * s_hi + slack;
    let lo = quadratic(a, hi) + alpha * s_lo - slack;
    let margin = validate_trapping(a, alpha, coupling_range, (lo, hi)).map_err(|e| match e {
        Error::TrappingFailed(msg) => Error::TrappingFailed(format!("alpha too large: {msg}")),
        other => other,
    })?;
    Ok(TrappingInterval {
        p: negative_fixed_point(a),
        interval: (lo, hi),
        margin,
    })
}

/// Checks `a − x² + α s ∈ [lo, hi]` for `x ∈ [lo, hi]`, `s ∈ [s_lo, s_hi]`
/// on a dense grid and at the analytic extremes.  Returns the clearance.
pub fn validate_trapping(
    a: f64,
    alpha: f64,
    coupling_range: (f64, f64),
    interval: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = interval;
    let (s_lo, s_hi) = coupling_range;
    if !(lo < hi) {
        return Err(Error::TrappingFailed("empty interval".into()));
    }
    // endpoint analysis: a − x² is maximal at the point nearest 0 and
    // minimal at the endpoint of largest magnitude
    let nearest_zero = if lo <= 0.0 && hi >= 0.0 { 0.0 } else { lo.abs().min(hi.abs()) };
    let farthest = lo.abs().max(hi.abs());
    let image_hi = quadratic(a, nearest_zero) + alpha * s_hi;
    let image_lo = quadratic(a, farthest) + alpha * s_lo;
    let mut clearance = (image_lo - lo).min(hi - image_hi);

    let step = (hi - lo) / TRAP_GRID as f64;
    for i in 0..=TRAP_GRID {
        let x = lo + step * i as f64;
        let q = quadratic(a, x);
        clearance = clearance.min(q + alpha * s_lo - lo).min(hi - (q + alpha * s_hi));
    }
    if clearance <= 0.0 {
        return Err(Error::TrappingFailed(format!(
            "image [{image_lo}, {image_hi}] leaves [{lo}, {hi}]"
        )));
    }
    Ok(clearance)
}

const ROOT_SUBDIVISIONS: usize = 4096;

/// Critical points of `Q_b^k` inside `[lo, hi]`: the zeros of
/// `Q_b^j`, `0 ≤ j < k`, located by subdivision and bisection.
pub fn critical_points(b: f64, k: u32, lo: f64, hi: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    for j in 0..k {
        let f = |t: f64| quadratic_iterate(b, t, j);
        let h = (hi - lo) / ROOT_SUBDIVISIONS as f64;
        let mut left = lo;
        let mut f_left = f(left);
        for i in 1..=ROOT_SUBDIVISIONS {
            let right = if i == ROOT_SUBDIVISIONS { hi } else { lo + h * i as f64 };
            let f_right = f(right);
            if f_left == 0.0 {
                roots.push(left);
            } else if f_left.signum() != f_right.signum() && f_right != 0.0 {
                roots.push(bisect(&f, left, right));
            }
            left = right;
            f_left = f_right;
        }
        if f_left == 0.0 {
            roots.push(left);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let s_lo = f(lo).signum();
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return mid;
        }
        let v = f(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_formula() {
        let p = negative_fixed_point(DEFAULT_MISIUREWICZ_A);
        assert!((p + 1.839_29).abs() < 1e-5, "{p}");
        assert!((quadratic(DEFAULT_MISIUREWICZ_A, p) - p).abs() < 1e-14);
    }

    #[test]
    fn misiurewicz_default_parameter() {
        let found = find_misiurewicz((1.4, 1.6), 3, 1).unwrap();
        assert!((found.a - DEFAULT_MISIUREWICZ_A).abs() < 1e-14);
        // independent re-iteration of the critical orbit
        let a = found.a;
        let (q3, q4) = (quadratic_iterate(a, 0.0, 3), quadratic_iterate(a, 0.0, 4));
        assert!((q4 - q3).abs() < 1e-12);
        let q = (-1.0 + (1.0 + 4.0 * a).sqrt()) / 2.0;
        assert!((q3 - q).abs() < 1e-12, "Q^3(0) is on the positive fixed point");
        let cubic = a * a * a - 2.0 * a * a + 2.0 * a - 2.0;
        assert!(cubic.abs() < 1e-13);
        assert!(found.residual.abs() < 1e-13);
    }

    #[test]
    fn full_map_is_rejected() {
        assert!(matches!(find_misiurewicz((1.9, 2.1), 2, 1), Err(Error::FullQuadratic(_))));
    }

    #[test]
    fn missing_sign_change() {
        assert!(matches!(find_misiurewicz((1.0, 1.1), 3, 1), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn periodic_attractor_has_support_gaps() {
        // a = 1.3 sits in a periodic window
        assert!(acip_support_gaps(1.3, 256, 200_000) > 0);
        assert_eq!(acip_support_gaps(DEFAULT_MISIUREWICZ_A, 256, 1_000_000), 0);
    }

    #[test]
    fn trapping_interval_is_invariant() {
        let t = trapping_interval(DEFAULT_MISIUREWICZ_A, 0.01, (-1.0, 1.0)).unwrap();
        assert!(t.margin > 0.0);
        let (lo, hi) = t.interval;
        assert!(lo < quadratic(DEFAULT_MISIUREWICZ_A, DEFAULT_MISIUREWICZ_A));
        assert!(hi > DEFAULT_MISIUREWICZ_A);
    }

    #[test]
    fn symmetric_fixed_point_interval_escapes() {
        let a = DEFAULT_MISIUREWICZ_A;
        let p = negative_fixed_point(a);
        let r = validate_trapping(a, 0.01, (-1.0, 1.0), (p - 0.02, -p + 0.02));
        assert!(matches!(r, Err(Error::TrappingFailed(_))));
    }

    #[test]
    fn large_coupling_fails() {
        let r = trapping_interval(DEFAULT_MISIUREWICZ_A, 1.0, (-1.0, 1.0));
        match r {
            Err(Error::TrappingFailed(msg)) => assert!(msg.contains("alpha too large")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn critical_points_of_second_iterate() {
        let b = DEFAULT_MISIUREWICZ_A;
        let cps = critical_points(b, 2, b - b * b, b);
        assert_eq!(cps.len(), 2);
        assert!(cps[0].abs() < 1e-15);
        assert!((cps[1] - b.sqrt()).abs() < 1e-14);
        for c in cps {
            assert!(quadratic_iterate_derivative(b, c, 2).abs() < 1e-13);
        }
    }
}
