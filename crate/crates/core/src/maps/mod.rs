//! The skew products `F1` (β-transformation base) and `F2` (quadratic base),
//! their singular sets, Jacobians and geometric preprocessing.

mod coupling;
mod nondegeneracy;
mod quadratic;

use std::f64::consts::TAU;
use std::sync::Arc;

pub use coupling::{ArcsinCoupling, Coupling, FnCoupling};
pub use nondegeneracy::{
    nondegeneracy_scan, nondegeneracy_scan_with_xi, Condition, LevelSummary, NondegeneracyReport,
    NondegeneracyViolation,
};
pub use quadratic::{
    acip_support_gaps, critical_points, find_misiurewicz, misiurewicz_residual, negative_fixed_point,
    quadratic, quadratic_iterate, quadratic_iterate_derivative, trapping_interval, validate_trapping,
    MisiurewiczParameter, TrappingInterval, DEFAULT_MISIUREWICZ_A,
};

use crate::error::{Error, Result};

pub const DEFAULT_BETA: f64 = 2.0;
pub const DEFAULT_K: u32 = 2;
pub const DEFAULT_ALPHA_F1: f64 = 0.01;
pub const DEFAULT_ALPHA_F2: f64 = 0.005;

/// Fiber coordinates closer than this to `x = 0` count as a singular hit.
pub const SINGULAR_GUARD: f64 = 1e-300;

const COUPLING_SCAN: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    F1,
    F2,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::F1 => "f1",
            MapKind::F2 => "f2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhasePoint {
    pub theta: f64,
    pub x: f64,
}

impl PhasePoint {
    pub const fn new(theta: f64, x: f64) -> Self {
        Self { theta, x }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularSet {
    /// Base coordinates of the lines `{b_i} × J`.
    pub horizontal_lines: Vec<f64>,
    /// Fiber level of the line `base × {0}`.
    pub vertical_level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingularPart {
    Full,
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone)]
pub enum BaseMap {
    /// `θ ↦ βθ mod 1` on the circle `[0, 1)`.
    Beta { beta: f64 },
    /// `θ ↦ Q_b^k(θ)` on `I = [Q_b²(0), Q_b(0)]`.
    Quadratic {
        b: f64,
        k: u32,
        domain: (f64, f64),
        coupling: Arc<dyn Coupling>,
    },
}

/// `log‖DF⁻¹‖⁻¹` and `log|∂ₓ f|` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianLogs {
    pub inv_norm: f64,
    pub fiber: f64,
}

/// Singular values `(σ_max, σ_min)` of a real 2×2 matrix.
pub fn singular_values(m: [[f64; 2]; 2]) -> (f64, f64) {
    let [[a, b], [c, d]] = m;
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let s_max = q + r;
    let det = (a * d - b * c).abs();
    let s_min = if s_max > 0.0 { det / s_max } else { 0.0 };
    (s_max, s_min)
}

/// Full parameterization of `F1` or `F2`.
#[derive(Debug, Clone)]
pub struct SkewProductSpec {
    a: f64,
    alpha: f64,
    base: BaseMap,
    trapping: TrappingInterval,
    singular: SingularSet,
}

pub fn make_f1(a: f64, alpha: f64, beta: f64) -> Result<SkewProductSpec> {
    check_fiber_params(a, alpha)?;
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(Error::param("beta", format!("base not expanding: beta = {beta} must be > 1")));
    }
    let trapping = trapping_interval(a, alpha, (-1.0, 1.0))?;
    Ok(SkewProductSpec {
        a,
        alpha,
        base: BaseMap::Beta { beta },
        trapping,
        singular: SingularSet {
            horizontal_lines: vec![0.0],
            vertical_level: 0.0,
        },
    })
}

/// `F2` with the default arcsine coupling on `I`.
pub fn make_f2_default(b: f64, k: u32, a: f64, alpha: f64) -> Result<SkewProductSpec> {
    check_base_quadratic(b)?;
    let domain = (quadratic(b, b), b);
    make_f2(b, k, a, alpha, Arc::new(ArcsinCoupling::new(domain.0, domain.1)))
}

pub fn make_f2(b: f64, k: u32, a: f64, alpha: f64, coupling: Arc<dyn Coupling>) -> Result<SkewProductSpec> {
    check_fiber_params(a, alpha)?;
    check_base_quadratic(b)?;
    if k < 1 {
        return Err(Error::param("k", "base iterate count must be at least 1"));
    }
    let domain = (quadratic(b, b), b);
    let (lo, hi) = domain;
    let mut s_lo = f64::INFINITY;
    let mut s_hi = f64::NEG_INFINITY;
    let singular_pts = coupling.singular_points();
    let grid = (0..=COUPLING_SCAN).map(|i| lo + (hi - lo) * i as f64 / COUPLING_SCAN as f64);
    for t in grid.chain(singular_pts.iter().copied()) {
        let v = coupling.value(t);
        s_lo = s_lo.min(v);
        s_hi = s_hi.max(v);
    }
    let sup = s_lo.abs().max(s_hi.abs());
    if !sup.is_finite() || sup > 1.0 + 1e-12 {
        return Err(Error::CouplingRange(sup));
    }
    let trapping = trapping_interval(a, alpha, (s_lo, s_hi))?;
    let mut lines = critical_points(b, k, lo, hi);
    lines.extend(singular_pts.into_iter().filter(|t| *t >= lo && *t <= hi));
    lines.sort_by(f64::total_cmp);
    lines.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    Ok(SkewProductSpec {
        a,
        alpha,
        base: BaseMap::Quadratic { b, k, domain, coupling },
        trapping,
        singular: SingularSet {
            horizontal_lines: lines,
            vertical_level: 0.0,
        },
    })
}

fn check_fiber_params(a: f64, alpha: f64) -> Result<()> {
    if a == 2.0 {
        return Err(Error::FullQuadratic(a));
    }
    if !(a > 0.0 && a < 2.0) {
        return Err(Error::param("a", format!("{a} outside (0, 2)")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::param("alpha", format!("non-positive coupling: alpha = {alpha}")));
    }
    Ok(())
}

fn check_base_quadratic(b: f64) -> Result<()> {
    if !(b > 0.0 && b <= 2.0) {
        return Err(Error::param("b", format!("{b} outside (0, 2]")));
    }
    Ok(())
}

/// `δ`-truncated distance: `d` if `d ≤ δ`, otherwise 1.
pub fn truncated_dist(d: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} outside (0, 1)")));
    }
    Ok(truncate(d, delta))
}

#[inline]
pub(crate) fn truncate(d: f64, delta: f64) -> f64 {
    if d <= delta {
        d
    } else {
        1.0
    }
}

impl SkewProductSpec {
    pub fn kind(&self) -> MapKind {
        match self.base {
            BaseMap::Beta { .. } => MapKind::F1,
            BaseMap::Quadratic { .. } => MapKind::F2,
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn base(&self) -> &BaseMap {
        &self.base
    }

    pub fn beta(&self) -> Option<f64> {
        match self.base {
            BaseMap::Beta { beta } => Some(beta),
            _ => None,
        }
    }

    /// `β` when it is an integer `≥ 2`, which enables exact digit-shift
    /// base orbits.
    pub fn integer_beta(&self) -> Option<u32> {
        match self.base {
            BaseMap::Beta { beta } if beta.fract() == 0.0 && (2.0..=65536.0).contains(&beta) => {
                Some(beta as u32)
            }
            _ => None,
        }
    }

    pub fn trapping(&self) -> &TrappingInterval {
        &self.trapping
    }

    pub fn fiber_interval(&self) -> (f64, f64) {
        self.trapping.interval
    }

    pub fn singular_set(&self) -> &SingularSet {
        &self.singular
    }

    /// `[0, 1)` for the circle, `I` for the quadratic base.
    pub fn base_domain(&self) -> (f64, f64) {
        match &self.base {
            BaseMap::Beta { .. } => (0.0, 1.0),
            BaseMap::Quadratic { domain, .. } => *domain,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.base, BaseMap::Beta { .. })
    }

    pub fn contains(&self, p: PhasePoint) -> bool {
        let (lo, hi) = self.base_domain();
        let base_ok = match self.base {
            BaseMap::Beta { .. } => p.theta >= lo && p.theta < hi,
            BaseMap::Quadratic { .. } => p.theta >= lo && p.theta <= hi,
        };
        base_ok && self.trapping.contains(p.x)
    }

    /// Diameter of `base × J` in the phase-space metric.
    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.base_domain();
        let base = if self.is_circle() { 0.5 } else { hi - lo };
        base.hypot(self.trapping.width())
    }

    #[inline]
    pub fn base_step(&self, theta: f64) -> f64 {
        match &self.base {
            BaseMap::Beta { beta } => {
                let y = beta * theta;
                y - y.floor()
            }
            BaseMap::Quadratic { b, k, domain, .. } => {
                quadratic_iterate(*b, theta, *k).clamp(domain.0, domain.1)
            }
        }
    }

    #[inline]
    pub fn base_derivative(&self, theta: f64) -> f64 {
        match &self.base {
            BaseMap::Beta { beta } => *beta,
            BaseMap::Quadratic { b, k, .. } => quadratic_iterate_derivative(*b, theta, *k),
        }
    }

    /// `sin 2πθ` for `F1`, `s(θ)` for `F2`.
    #[inline]
    pub fn coupling_value(&self, theta: f64) -> f64 {
        match &self.base {
            BaseMap::Beta { .. } => (TAU * theta).sin(),
            BaseMap::Quadratic { coupling, .. } => coupling.value(theta),
        }
    }

    #[inline]
    pub fn coupling_derivative(&self, theta: f64) -> f64 {
        match &self.base {
            BaseMap::Beta { .. } => TAU * (TAU * theta).cos(),
            BaseMap::Quadratic { coupling, .. } => coupling.derivative(theta),
        }
    }

    #[inline]
    pub fn fiber_step(&self, theta: f64, x: f64) -> f64 {
        quadratic(self.a, x) + self.alpha * self.coupling_value(theta)
    }

    /// One application of the map.
    #[inline]
    pub fn apply(&self, p: PhasePoint) -> PhasePoint {
        PhasePoint {
            theta: self.base_step(p.theta),
            x: self.fiber_step(p.theta, p.x),
        }
    }

    /// `DF = [[g'(θ), 0], [α s'(θ), −2x]]`.
    pub fn jacobian(&self, p: PhasePoint) -> [[f64; 2]; 2] {
        [
            [self.base_derivative(p.theta), 0.0],
            [self.alpha * self.coupling_derivative(p.theta), -2.0 * p.x],
        ]
    }

    /// `(log‖DF⁻¹‖⁻¹, log|∂ₓ f|)` from the exact 2×2 singular values.
    pub fn jacobian_logs(&self, p: PhasePoint) -> Result<JacobianLogs> {
        if p.x.abs() < SINGULAR_GUARD {
            return Err(Error::OnSingularity);
        }
        let (_, s_min) = singular_values(self.jacobian(p));
        let inv_norm = s_min.ln();
        if !inv_norm.is_finite() {
            return Err(Error::OnSingularity);
        }
        Ok(JacobianLogs {
            inv_norm,
            fiber: (2.0 * p.x.abs()).ln(),
        })
    }

    #[inline]
    pub fn horizontal_distance(&self, theta: f64) -> f64 {
        match self.base {
            BaseMap::Beta { .. } => {
                let t = theta - theta.floor();
                t.min(1.0 - t)
            }
            BaseMap::Quadratic { .. } => self
                .singular
                .horizontal_lines
                .iter()
                .fold(f64::INFINITY, |m, b| m.min((theta - b).abs())),
        }
    }

    #[inline]
    pub fn dist_to_singular(&self, p: PhasePoint, which: SingularPart) -> f64 {
        match which {
            SingularPart::Horizontal => self.horizontal_distance(p.theta),
            SingularPart::Vertical => (p.x - self.singular.vertical_level).abs(),
            SingularPart::Full => self
                .horizontal_distance(p.theta)
                .min((p.x - self.singular.vertical_level).abs()),
        }
    }

    /// Phase-space distance (arc length on the circle base).
    pub fn distance(&self, p: PhasePoint, q: PhasePoint) -> f64 {
        let mut dt = (p.theta - q.theta).abs();
        if self.is_circle() {
            dt = dt.min(1.0 - dt);
        }
        dt.hypot(p.x - q.x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1() -> SkewProductSpec {
        make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 2.0).unwrap()
    }

    fn f2() -> SkewProductSpec {
        make_f2_default(DEFAULT_MISIUREWICZ_A, 2, DEFAULT_MISIUREWICZ_A, 0.005).unwrap()
    }

    #[test]
    fn f1_construction_and_singular_set() {
        let s = f1();
        assert_eq!(s.kind(), MapKind::F1);
        assert_eq!(s.singular_set().horizontal_lines, vec![0.0]);
        assert_eq!(s.singular_set().vertical_level, 0.0);
    }

    #[test]
    fn f1_parameter_errors() {
        let a = DEFAULT_MISIUREWICZ_A;
        assert!(matches!(make_f1(a, 0.0, 2.0), Err(Error::InvalidParameter { name: "alpha", .. })));
        assert!(matches!(make_f1(a, 0.01, 0.9), Err(Error::InvalidParameter { name: "beta", .. })));
        assert!(matches!(make_f1(2.0, 0.01, 2.0), Err(Error::FullQuadratic(_))));
        assert!(matches!(make_f1(a, 1.0, 2.0), Err(Error::TrappingFailed(_))));
    }

    #[test]
    fn f2_construction() {
        let s = f2();
        let (lo, hi) = s.base_domain();
        let b = DEFAULT_MISIUREWICZ_A;
        assert_eq!((lo, hi), (b - b * b, b));
        let lines = &s.singular_set().horizontal_lines;
        // critical points 0, √b plus the two coupling endpoints
        assert_eq!(lines.len(), 4);
        assert!(lines.iter().any(|t| (t - b.sqrt()).abs() < 1e-14));
    }

    #[test]
    fn f2_parameter_errors() {
        let b = DEFAULT_MISIUREWICZ_A;
        let wide = FnCoupling::new("wide", |t: f64| 1.5 * t.sin(), |t: f64| 1.5 * t.cos(), vec![]);
        let r = make_f2(b, 2, b, 0.005, Arc::new(wide));
        assert!(matches!(r, Err(Error::CouplingRange(s)) if s > 1.0));
        assert!(matches!(make_f2_default(b, 0, b, 0.005), Err(Error::InvalidParameter { name: "k", .. })));
    }

    #[test]
    fn apply_examples() {
        let s = make_f1(1.5, 0.01, 2.0).unwrap();
        let p = s.apply(PhasePoint::new(0.25, 0.0));
        assert_eq!(p.theta, 0.5);
        assert!((p.x - 1.51).abs() < 1e-15);
        let q = s.apply(PhasePoint::new(0.75, 0.3));
        assert_eq!(q.theta, 0.5);
        assert!((q.x - (1.5 - 0.09 - 0.01)).abs() < 1e-15);

        let s2 = make_f2_default(1.6, 1, 1.5, 0.005).unwrap();
        let z = s2.apply(PhasePoint::new(0.0, 0.0));
        assert_eq!(z.theta, 1.6);
        assert_eq!(z.x, 1.5 + 0.005 * s2.coupling_value(0.0));
    }

    #[test]
    fn jacobian_diagonal_case() {
        let s = f1();
        let j = s.jacobian_logs(PhasePoint::new(0.25, 1.0)).unwrap();
        assert!((j.inv_norm - 2f64.ln()).abs() < 1e-12);
        assert!((j.fiber - 2f64.ln()).abs() < 1e-15);
        assert_eq!(s.jacobian_logs(PhasePoint::new(0.3, 0.0)), Err(Error::OnSingularity));
    }

    #[test]
    fn singular_distances() {
        let s = f1();
        let p = PhasePoint::new(0.5, 0.3);
        assert_eq!(s.dist_to_singular(p, SingularPart::Horizontal), 0.5);
        assert_eq!(s.dist_to_singular(p, SingularPart::Vertical), 0.3);
        assert_eq!(s.dist_to_singular(p, SingularPart::Full), 0.3);
        assert!((s.dist_to_singular(PhasePoint::new(0.9, 0.3), SingularPart::Horizontal) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn truncated_distance() {
        assert_eq!(truncated_dist(0.05, 0.1).unwrap(), 0.05);
        assert_eq!(truncated_dist(0.5, 0.1).unwrap(), 1.0);
        assert_eq!(truncated_dist(0.1, 0.1).unwrap(), 0.1);
        assert!(truncated_dist(0.1, 1.0).is_err());
    }

    #[test]
    fn singular_values_agree_with_eigen_route() {
        let m = [[2.0, 0.0], [0.3, -0.7]];
        let (s1, s2) = singular_values(m);
        // eigenvalues of MᵀM
        let (a, b, d): (f64, f64, f64) = (4.0 + 0.09, 0.3 * -0.7, 0.49);
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
        assert!((s1 * s1 - 0.5 * (tr + disc)).abs() < 1e-12);
        assert!((s2 * s2 - 0.5 * (tr - disc)).abs() < 1e-12);
    }

    #[test]
    fn trapping_on_grid() {
        for s in [f1(), f2()] {
            let (lo, hi) = s.base_domain();
            let (jl, jh) = s.fiber_interval();
            let n = 300;
            for i in 0..n {
                for j in 0..=n {
                    let th = lo + (hi - lo) * i as f64 / n as f64;
                    let p = PhasePoint::new(th, jl + (jh - jl) * j as f64 / n as f64);
                    assert!(s.contains(s.apply(p)), "{p:?}");
                }
            }
        }
    }
}
