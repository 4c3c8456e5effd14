//! Orbits, cocycle sums and the time functions built on them.
//!
//! An [`Orbit`] is either *pure* (literal floating-point iteration of the
//! map) or *refreshed*.  Refreshed orbits exist because `βθ mod 1` with
//! integer `β` is a shift on base-`β` digits: in `f64` every orbit reaches
//! `θ = 0` after about 53 doublings.  A refreshed orbit keeps `θ` as a 64-bit
//! digit window and appends a fresh random trailing digit per step, which
//! produces an exact sample of a Lebesgue-typical base orbit while the
//! observed leading digits follow the map exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::ensemble::{map_members, member_rng, EnsembleConfig, PairwiseSum};
use crate::error::{Error, Result};
use crate::maps::{truncate, PhasePoint, SingularPart, SkewProductSpec, SINGULAR_GUARD};

const ONE_MINUS: f64 = 1.0 - f64::EPSILON / 2.0;
const TWO_POW_M52: f64 = 1.0 / (1u64 << 52) as f64;

#[derive(Debug, Clone)]
enum Base {
    Float,
    Binary { window: u64, bits: u64, left: u32 },
    Digits { window: u64, q: u64, modulus: u64 },
}

#[derive(Debug, Clone)]
pub struct Orbit<'a> {
    spec: &'a SkewProductSpec,
    point: PhasePoint,
    base: Base,
    rng: Option<ChaCha8Rng>,
    steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    Endpoint,
    Trajectory,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Iterated {
    Endpoint(PhasePoint),
    Trajectory(Vec<PhasePoint>),
}

impl Iterated {
    pub fn last(&self) -> PhasePoint {
        match self {
            Iterated::Endpoint(p) => *p,
            Iterated::Trajectory(t) => *t.last().expect("trajectory holds the start point"),
        }
    }
}

/// `n`-fold literal application of the map.
pub fn iterate(spec: &SkewProductSpec, point: PhasePoint, n: u64, record: Record) -> Result<Iterated> {
    Orbit::pure(spec, point).run(n, record)
}

impl<'a> Orbit<'a> {
    pub fn pure(spec: &'a SkewProductSpec, point: PhasePoint) -> Self {
        Self {
            spec,
            point,
            base: Base::Float,
            rng: None,
            steps: 0,
        }
    }

    /// Refreshed orbit started at a Lebesgue-uniform point of `base × J`.
    /// Falls back to a pure orbit (with the same start distribution) when the
    /// base is not an integer-slope β-map.
    pub fn lebesgue(spec: &'a SkewProductSpec, mut rng: ChaCha8Rng) -> Self {
        let (j_lo, j_hi) = spec.fiber_interval();
        match spec.integer_beta() {
            Some(2) => {
                let window: u64 = rng.random();
                let x = j_lo + (j_hi - j_lo) * rng.random::<f64>();
                let point = PhasePoint::new(binary_theta(window), x);
                Self::refreshed(spec, point, Base::Binary { window, bits: 0, left: 0 }, rng)
            }
            Some(q) => {
                let (q, modulus) = digit_modulus(q);
                let window = rng.random_range(0..modulus);
                let x = j_lo + (j_hi - j_lo) * rng.random::<f64>();
                let point = PhasePoint::new(digit_theta(window, modulus), x);
                Self::refreshed(spec, point, Base::Digits { window, q, modulus }, rng)
            }
            None => {
                let (t_lo, t_hi) = spec.base_domain();
                let theta = t_lo + (t_hi - t_lo) * rng.random::<f64>();
                let x = j_lo + (j_hi - j_lo) * rng.random::<f64>();
                Self::refreshed(spec, PhasePoint::new(theta, x), Base::Float, rng)
            }
        }
    }

    /// Refreshed orbit from a given start.  The first point is `point`
    /// exactly; later base coordinates agree with `βθ mod 1` in their leading
    /// 52 bits.
    pub fn from_point_refreshed(spec: &'a SkewProductSpec, point: PhasePoint, rng: ChaCha8Rng) -> Self {
        let theta = point.theta - point.theta.floor();
        let base = match spec.integer_beta() {
            Some(2) => Base::Binary {
                window: (theta * 18_446_744_073_709_551_616.0) as u64,
                bits: 0,
                left: 0,
            },
            Some(q) => {
                let (q, modulus) = digit_modulus(q);
                Base::Digits {
                    window: ((theta * modulus as f64) as u64).min(modulus - 1),
                    q,
                    modulus,
                }
            }
            None => Base::Float,
        };
        Self::refreshed(spec, point, base, rng)
    }

    fn refreshed(spec: &'a SkewProductSpec, point: PhasePoint, base: Base, rng: ChaCha8Rng) -> Self {
        Self {
            spec,
            point,
            base,
            rng: Some(rng),
            steps: 0,
        }
    }

    pub fn spec(&self) -> &'a SkewProductSpec {
        self.spec
    }

    pub fn point(&self) -> PhasePoint {
        self.point
    }

    /// Number of steps taken so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn is_refreshed(&self) -> bool {
        !matches!(self.base, Base::Float)
    }

    /// Advances one step.  Fails when the new fiber coordinate is within
    /// [`SINGULAR_GUARD`] of the critical line.
    #[inline]
    pub fn step(&mut self) -> Result<PhasePoint> {
        let PhasePoint { theta, x } = self.point;
        let x_next = self.spec.fiber_step(theta, x);
        let theta_next = match &mut self.base {
            Base::Float => self.spec.base_step(theta),
            Base::Binary { window, bits, left } => {
                if *left == 0 {
                    *bits = self.rng.as_mut().expect("refreshed orbit has a stream").random();
                    *left = 64;
                }
                *window = (*window << 1) | (*bits & 1);
                *bits >>= 1;
                *left -= 1;
                binary_theta(*window)
            }
            Base::Digits { window, q, modulus } => {
                let digit = self.rng.as_mut().expect("refreshed orbit has a stream").random_range(0..*q);
                *window = ((*window as u128 * *q as u128) % *modulus as u128) as u64 + digit;
                digit_theta(*window, *modulus)
            }
        };
        self.steps += 1;
        self.point = PhasePoint::new(theta_next, x_next);
        if !(x_next.abs() >= SINGULAR_GUARD) {
            return Err(Error::SingularHit { step: self.steps });
        }
        Ok(self.point)
    }

    pub fn advance(&mut self, n: u64) -> Result<PhasePoint> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(self.point)
    }

    /// `n` steps, returning the endpoint or all `n + 1` points.
    pub fn run(mut self, n: u64, record: Record) -> Result<Iterated> {
        match record {
            Record::Endpoint => self.advance(n).map(Iterated::Endpoint),
            Record::Trajectory => {
                let mut traj = Vec::with_capacity(n as usize + 1);
                traj.push(self.point);
                for _ in 0..n {
                    traj.push(self.step()?);
                }
                Ok(Iterated::Trajectory(traj))
            }
        }
    }

    #[inline]
    fn logs_here(&self) -> Result<(f64, f64)> {
        self.spec
            .jacobian_logs(self.point)
            .map(|j| (j.inv_norm, j.fiber))
            .map_err(|_| Error::SingularHit { step: self.steps })
    }

    #[inline]
    fn recurrence_term(&self, delta: f64, which: SingularPart) -> Result<f64> {
        let d = self.spec.dist_to_singular(self.point, which);
        if !(d > 0.0) {
            return Err(Error::SingularHit { step: self.steps });
        }
        Ok(-truncate(d, delta).ln())
    }

    /// Birkhoff sums of `log‖DF⁻¹‖⁻¹` and `log|∂ₓf|` over the next `n` points
    /// (the current point included).
    pub fn cocycle_sums(&mut self, n: u64, keep_partials: bool) -> Result<CocycleSums> {
        let mut inv = PairwiseSum::new();
        let mut fib = PairwiseSum::new();
        let mut partials = keep_partials.then(|| Vec::with_capacity(n as usize));
        let (mut run_inv, mut run_fib) = (0.0, 0.0);
        for j in 0..n {
            if j > 0 {
                self.step()?;
            }
            let (a, b) = self.logs_here()?;
            inv.push(a);
            fib.push(b);
            if let Some(p) = partials.as_mut() {
                run_inv += a;
                run_fib += b;
                p.push((run_inv, run_fib));
            }
        }
        if n > 0 {
            self.step()?;
        }
        Ok(CocycleSums {
            n,
            sum_inv_norm: inv.total(),
            sum_fiber: fib.total(),
            partials,
        })
    }

    /// Expansion time `ℰ`: smallest `N` with `(1/n) Σ_{j<n} log‖DF(Fʲy)⁻¹‖⁻¹ ≥ c/2`
    /// for all `N ≤ n ≤ n_max`.
    pub fn expansion_time(&mut self, c: f64, n_max: u64) -> Result<TimeFunctionResult> {
        let half_c = c / 2.0;
        let mut tracker = LastFail::default();
        let mut sum = 0.0;
        for n in 1..=n_max {
            if n > 1 {
                self.step()?;
            }
            sum += self.logs_here()?.0;
            tracker.observe(n, sum / n as f64 >= half_c);
        }
        Ok(tracker.finish(n_max))
    }

    /// Recurrence time `ℛ_{ε,δ}` against the selected part of `𝒮`: smallest
    /// `N` with `(1/n) Σ_{j<n} −log dist_δ(Fʲy, 𝒮) ≤ 2ε` for `N ≤ n ≤ n_max`.
    pub fn recurrence_time(
        &mut self,
        epsilon: f64,
        delta: f64,
        which: SingularPart,
        n_max: u64,
    ) -> Result<TimeFunctionResult> {
        check_recurrence_params(epsilon, delta)?;
        let bound = 2.0 * epsilon;
        let mut tracker = LastFail::default();
        let mut sum = 0.0;
        for n in 1..=n_max {
            if n > 1 {
                self.step()?;
            }
            sum += self.recurrence_term(delta, which)?;
            tracker.observe(n, sum / n as f64 <= bound);
        }
        Ok(tracker.finish(n_max))
    }

    /// All time functions from a single pass.  The horizontal and vertical
    /// recurrence components use `ε/2`, which turns the decomposition
    /// `{ℛ > n} ⊂ {ℛ_h > n} ∪ {ℛ_v > n}` into an exact inclusion
    /// (`Σ max(a, b) > 2εn` forces `Σ a > εn` or `Σ b > εn`).
    pub fn time_profile(&mut self, params: &TimeParams, n_max: u64) -> Result<TimeProfile> {
        check_recurrence_params(params.epsilon, params.delta)?;
        let half_c = params.c / 2.0;
        let bound = 2.0 * params.epsilon;
        let split = params.epsilon;
        let delta = params.delta;
        let mut t = [LastFail::default(), LastFail::default(), LastFail::default(), LastFail::default()];
        let (mut s_e, mut s_h, mut s_v, mut s_f) = (0.0, 0.0, 0.0, 0.0);
        for n in 1..=n_max {
            if n > 1 {
                self.step()?;
            }
            let (inv, _) = self.logs_here()?;
            let h = self.recurrence_term(delta, SingularPart::Horizontal)?;
            let v = self.recurrence_term(delta, SingularPart::Vertical)?;
            s_e += inv;
            s_h += h;
            s_v += v;
            s_f += h.max(v);
            let nf = n as f64;
            t[0].observe(n, s_e / nf >= half_c);
            t[1].observe(n, s_f / nf <= bound);
            t[2].observe(n, s_h / nf <= split);
            t[3].observe(n, s_v / nf <= split);
        }
        Ok(TimeProfile {
            expansion: t[0].finish(n_max),
            recurrence: t[1].finish(n_max),
            recurrence_h: t[2].finish(n_max),
            recurrence_v: t[3].finish(n_max),
        })
    }

    /// Return depths `r_j = max(0, log(√α/|x_j|))`, `0 ≤ j < n`, with the
    /// bookkeeping of the set `G` and the exceptional sets `B₁(n)`, `B₂(n)`.
    pub fn return_depths(&mut self, n: u64, kappa: f64, c: f64) -> Result<DepthSummary> {
        if !(kappa > 0.0 && kappa < 0.25) {
            return Err(Error::param("kappa", format!("{kappa} outside (0, 1/4)")));
        }
        let alpha = self.spec.alpha();
        let sqrt_alpha = alpha.sqrt();
        let g_threshold = (0.5 - 2.0 * kappa) * (1.0 / alpha).ln();
        let b2_level = sqrt_alpha * (-(n as f64).sqrt()).exp();
        let mut depths = Vec::with_capacity(n as usize);
        let mut g_indices = Vec::new();
        let mut g_sum = PairwiseSum::new();
        let mut fiber = PairwiseSum::new();
        let mut in_b2 = false;
        for j in 0..n {
            if j > 0 {
                self.step()?;
            }
            let x = self.point.x.abs();
            if !(x >= SINGULAR_GUARD) {
                return Err(Error::SingularHit { step: self.steps });
            }
            let r = (sqrt_alpha / x).ln().max(0.0);
            depths.push(r);
            if r >= g_threshold {
                g_indices.push(j);
                g_sum.push(r);
            }
            if j >= 1 && x <= b2_level {
                in_b2 = true;
            }
            fiber.push((2.0 * x).ln());
        }
        let g_sum = g_sum.total();
        let log_fiber_derivative = fiber.total();
        let in_b1 = g_sum >= 0.5 * c * n as f64;
        Ok(DepthSummary {
            depths,
            g_indices,
            g_sum,
            in_b1,
            in_b2,
            kappa,
            log_fiber_derivative,
            principal_bound_holds: log_fiber_derivative >= c * n as f64 - g_sum,
        })
    }
}

#[inline]
fn binary_theta(window: u64) -> f64 {
    ((window >> 12) as f64 + 0.5) * TWO_POW_M52
}

#[inline]
fn digit_theta(window: u64, modulus: u64) -> f64 {
    ((window as f64 + 0.5) / modulus as f64).min(ONE_MINUS)
}

/// `(q, q^L)` with `L` maximal such that `q^L ≤ 2^63`.
fn digit_modulus(q: u32) -> (u64, u64) {
    let q = q as u64;
    let mut m: u64 = 1;
    while let Some(next) = m.checked_mul(q).filter(|&v| v <= 1 << 63) {
        m = next;
    }
    (q, m)
}

fn check_recurrence_params(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("{epsilon} must be > 0")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} outside (0, 1)")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CocycleSums {
    pub n: u64,
    pub sum_inv_norm: f64,
    pub sum_fiber: f64,
    /// Running prefix sums `(Σ_{j≤i} log‖DF⁻¹‖⁻¹, Σ_{j≤i} log|∂ₓf|)`.
    pub partials: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeValue {
    Finite(u64),
    ExceededHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeFunctionResult {
    pub value: TimeValue,
    pub horizon: u64,
    /// Last `n ≤ horizon` at which the defining inequality fails.
    pub witness: Option<u64>,
}

impl TimeFunctionResult {
    /// `true` when the time function exceeds `n` (sentinels exceed everything).
    pub fn exceeds(&self, n: u64) -> bool {
        match self.value {
            TimeValue::Finite(v) => v > n,
            TimeValue::ExceededHorizon => true,
        }
    }

    pub fn finite(&self) -> Option<u64> {
        match self.value {
            TimeValue::Finite(v) => Some(v),
            TimeValue::ExceededHorizon => None,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct LastFail(Option<u64>);

impl LastFail {
    #[inline]
    fn observe(&mut self, n: u64, holds: bool) {
        if !holds {
            self.0 = Some(n);
        }
    }

    fn finish(self, horizon: u64) -> TimeFunctionResult {
        let value = match self.0 {
            None => TimeValue::Finite(1),
            Some(n) if n >= horizon => TimeValue::ExceededHorizon,
            Some(n) => TimeValue::Finite(n + 1),
        };
        TimeFunctionResult {
            value,
            horizon,
            witness: self.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeParams {
    /// Expansion constant `c` (the inequality uses `c/2`).
    pub c: f64,
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeProfile {
    pub expansion: TimeFunctionResult,
    /// `ℛ_{ε,δ}` against the full singular set.
    pub recurrence: TimeFunctionResult,
    /// `ℛ_{ε/2,δ,h}`.
    pub recurrence_h: TimeFunctionResult,
    /// `ℛ_{ε/2,δ,v}`.
    pub recurrence_v: TimeFunctionResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthSummary {
    pub depths: Vec<f64>,
    pub g_indices: Vec<u64>,
    pub g_sum: f64,
    pub in_b1: bool,
    pub in_b2: bool,
    pub kappa: f64,
    /// `log|∂ₓf_n| = Σ_{j<n} log 2|x_j|`.
    pub log_fiber_derivative: f64,
    /// Whether `log|∂ₓf_n| ≥ cn − Σ_G r_j` held on this orbit.
    pub principal_bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCalibration {
    /// 10th percentile of the finite-time averages.
    pub c: f64,
    pub mean: f64,
    pub members_used: usize,
    pub excluded: usize,
}

pub const CALIBRATION_QUANTILE: f64 = 0.1;

/// Estimates `c` as the 10th percentile of `(1/n) Σ log‖DF⁻¹‖⁻¹` over a
/// Lebesgue-uniform ensemble.
pub fn calibrate_expansion_constant(
    spec: &SkewProductSpec,
    cfg: &EnsembleConfig,
    n: u64,
) -> Result<ExpansionCalibration> {
    let averages = map_members(cfg.size, |i| {
        let mut orbit = Orbit::lebesgue(spec, member_rng(cfg.seed, i));
        orbit.cocycle_sums(n, false).ok().map(|s| s.sum_inv_norm / n as f64)
    });
    let excluded = averages.iter().filter(|a| a.is_none()).count();
    let mut used: Vec<f64> = averages.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mean = crate::ensemble::pairwise_sum(&used) / used.len() as f64;
    used.sort_by(f64::total_cmp);
    let idx = ((CALIBRATION_QUANTILE * used.len() as f64).floor() as usize).min(used.len() - 1);
    Ok(ExpansionCalibration {
        c: used[idx],
        mean,
        members_used: used.len(),
        excluded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaCalibration {
    pub delta: f64,
    pub halvings: u32,
    /// Stationary mean of `−log dist_δ(·, 𝒮)` at the chosen `δ`.
    pub mean_log_distance: f64,
}

const MAX_HALVINGS: u32 = 60;

/// Starts from `δ₀ = α^{1−2κ}` and halves until the stationary mean of
/// `−log dist_δ(·, 𝒮)` is at most `ε`.
pub fn calibrate_delta(
    spec: &SkewProductSpec,
    epsilon: f64,
    kappa: f64,
    cfg: &EnsembleConfig,
    steps: u64,
) -> Result<DeltaCalibration> {
    if !(kappa > 0.0 && kappa < 0.25) {
        return Err(Error::param("kappa", format!("{kappa} outside (0, 1/4)")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", format!("{epsilon} must be > 0")));
    }
    let delta0 = spec.alpha().powf(1.0 - 2.0 * kappa).min(0.5);
    let dists: Vec<f64> = map_members(cfg.size, |i| {
        let mut orbit = Orbit::lebesgue(spec, member_rng(cfg.seed, i));
        let mut out = Vec::with_capacity(steps as usize);
        if orbit.advance(cfg.burn_in).is_err() {
            return out;
        }
        for _ in 0..steps {
            out.push(spec.dist_to_singular(orbit.point(), SingularPart::Full));
            if orbit.step().is_err() {
                break;
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect();
    if dists.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut delta = delta0;
    for halvings in 0..=MAX_HALVINGS {
        let mut acc = PairwiseSum::new();
        for &d in &dists {
            acc.push(-truncate(d.max(f64::MIN_POSITIVE), delta).ln());
        }
        let mean = acc.total() / dists.len() as f64;
        if mean <= epsilon {
            return Ok(DeltaCalibration {
                delta,
                halvings,
                mean_log_distance: mean,
            });
        }
        delta *= 0.5;
    }
    Err(Error::param("delta", "calibration did not reach the slow-recurrence bound"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_f1, make_f2_default, DEFAULT_MISIUREWICZ_A};

    fn f1() -> SkewProductSpec {
        make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 2.0).unwrap()
    }

    #[test]
    fn iterate_identity_and_composition() {
        let s = f1();
        let p = PhasePoint::new(0.3, 0.4);
        assert_eq!(iterate(&s, p, 0, Record::Endpoint).unwrap().last(), p);
        let two = iterate(&s, p, 2, Record::Endpoint).unwrap().last();
        assert_eq!(two, s.apply(s.apply(p)));
        let traj = iterate(&s, p, 5, Record::Trajectory).unwrap();
        match &traj {
            Iterated::Trajectory(t) => assert_eq!(t.len(), 6),
            _ => unreachable!(),
        }
    }

    #[test]
    fn pure_doubling_collapses_but_refreshed_does_not() {
        let s = f1();
        let p = PhasePoint::new(0.123_456_789, 0.4);
        let end = iterate(&s, p, 200, Record::Endpoint).unwrap().last();
        assert_eq!(end.theta, 0.0);
        let mut o = Orbit::from_point_refreshed(&s, p, member_rng(1, 0));
        assert_eq!(o.point(), p);
        let mut prev = p.theta;
        for _ in 0..200 {
            let q = o.step().unwrap();
            let doubled = (2.0 * prev) % 1.0;
            let diff = (q.theta - doubled).abs();
            assert!(diff.min(1.0 - diff) <= 2.0 * f64::EPSILON, "{diff}");
            assert!(q.theta > 0.0 && q.theta < 1.0);
            prev = q.theta;
        }
    }

    #[test]
    fn ternary_refresh_follows_map() {
        let s = make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 3.0).unwrap();
        let mut o = Orbit::lebesgue(&s, member_rng(2, 5));
        let mut prev = o.point().theta;
        for _ in 0..500 {
            let q = o.step().unwrap();
            let diff = (q.theta - (3.0 * prev) % 1.0).abs();
            assert!(diff.min(1.0 - diff) < 1e-15, "{diff}");
            prev = q.theta;
        }
    }

    #[test]
    fn cocycle_sum_diagonal_case() {
        let s = f1();
        let mut o = Orbit::pure(&s, PhasePoint::new(0.25, 1.0));
        let c = o.cocycle_sums(1, true).unwrap();
        assert!((c.sum_inv_norm - 2f64.ln()).abs() < 1e-12);
        assert_eq!(c.partials.unwrap().len(), 1);
    }

    #[test]
    fn time_function_minimal_cases() {
        let s = f1();
        // log σ_min = log 2 ≥ c/2 for c = 1 at every step of a point near (0.25, 1)
        let mut o = Orbit::pure(&s, PhasePoint::new(0.25, 1.0));
        let r = o.expansion_time(0.01, 1).unwrap();
        assert_eq!(r.value, TimeValue::Finite(1));
        assert_eq!(r.witness, None);
        let mut o = Orbit::pure(&s, PhasePoint::new(0.25, 1.0));
        let r = o.expansion_time(100.0, 3).unwrap();
        assert_eq!(r.value, TimeValue::ExceededHorizon);
        assert_eq!(r.witness, Some(3));
    }

    #[test]
    fn recurrence_far_from_singular_set_is_one() {
        let s = f1();
        let mut o = Orbit::pure(&s, PhasePoint::new(0.25, 1.0));
        let r = o.recurrence_time(0.1, 0.01, SingularPart::Full, 1).unwrap();
        assert_eq!(r.value, TimeValue::Finite(1));
    }

    #[test]
    fn recurrence_singular_hit() {
        let s = f1();
        let mut o = Orbit::pure(&s, PhasePoint::new(0.25, 0.0));
        assert!(matches!(
            o.recurrence_time(0.1, 0.01, SingularPart::Vertical, 5),
            Err(Error::SingularHit { step: 0 })
        ));
    }

    #[test]
    fn depth_examples() {
        let s = f1();
        let sa = 0.1;
        let mut o = Orbit::pure(&s, PhasePoint::new(0.3, sa * (-2f64).exp()));
        let d = o.return_depths(1, 0.1, 0.2).unwrap();
        assert!((d.depths[0] - 2.0).abs() < 1e-12);
        let mut o = Orbit::pure(&s, PhasePoint::new(0.3, 0.5));
        let d = o.return_depths(1, 0.1, 0.2).unwrap();
        assert_eq!(d.depths[0], 0.0);
        assert!(Orbit::pure(&s, PhasePoint::new(0.3, 0.5)).return_depths(1, 0.3, 0.2).is_err());
    }

    #[test]
    fn f2_orbits_stay_trapped() {
        let s = make_f2_default(DEFAULT_MISIUREWICZ_A, 2, DEFAULT_MISIUREWICZ_A, 0.005).unwrap();
        let mut o = Orbit::lebesgue(&s, member_rng(3, 0));
        assert!(!o.is_refreshed());
        for _ in 0..10_000 {
            let p = o.step().unwrap();
            assert!(s.contains(p));
        }
    }
}
