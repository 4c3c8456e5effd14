use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::maps::{PhasePoint, SkewProductSpec};

type Eval = Arc<dyn Fn(PhasePoint) -> f64 + Send + Sync>;

/// Real function on phase space (or on the base only) with a Hölder exponent
/// and optionally a precomputed Hölder norm.
#[derive(Clone)]
pub struct Observable {
    name: String,
    eval: Eval,
    base_only: bool,
    gamma: f64,
    holder_norm: Option<f64>,
    mean_estimate: Option<(f64, f64)>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("base_only", &self.base_only)
            .field("gamma", &self.gamma)
            .field("holder_norm", &self.holder_norm)
            .field("mean_estimate", &self.mean_estimate)
            .finish_non_exhaustive()
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        gamma: f64,
        base_only: bool,
        f: impl Fn(PhasePoint) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::param("gamma", format!("{gamma} outside (0, 1]")));
        }
        Ok(Self {
            name: name.into(),
            eval: Arc::new(f),
            base_only,
            gamma,
            holder_norm: None,
            mean_estimate: None,
        })
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), 1.0, true, move |_| c).expect("valid exponent")
    }

    /// `cos 2πθ`.
    pub fn cos_theta() -> Self {
        Self::new("cos_theta", 1.0, true, |p| (TAU * p.theta).cos()).expect("valid exponent")
    }

    /// `(θ, x) ↦ x`.
    pub fn fiber() -> Self {
        Self::new("x", 1.0, false, |p| p.x).expect("valid exponent")
    }

    /// `cos 2πθ + x`.
    pub fn generic() -> Self {
        Self::new("cos_theta_plus_x", 1.0, false, |p| (TAU * p.theta).cos() + p.x).expect("valid exponent")
    }

    /// `ψ∘F − ψ`.
    pub fn coboundary(spec: &SkewProductSpec, psi: &Observable) -> Self {
        let spec = spec.clone();
        let inner = psi.eval.clone();
        Self::new(format!("coboundary({})", psi.name), psi.gamma, false, move |p| {
            inner(spec.apply(p)) - inner(p)
        })
        .expect("inherits a valid exponent")
    }

    /// Auxiliary base function: `−log d` for `d < δ`, the linear ramp
    /// `(log δ/δ)(d − 2δ)` on `[δ, 2δ)`, and 0 beyond, where `d` is the
    /// distance to the horizontal singular lines.  With `k`, the truncation
    /// `min(φ, k)`.
    pub fn phi(spec: &SkewProductSpec, delta: f64, k: Option<f64>) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(Error::param("delta", format!("{delta} outside (0, 1/2)")));
        }
        if let Some(k) = k {
            if !(k > 0.0) {
                return Err(Error::param("k", format!("{k} must be > 0")));
            }
        }
        let spec = spec.clone();
        let name = match k {
            Some(k) => format!("phi_k(delta={delta},k={k})"),
            None => format!("phi(delta={delta})"),
        };
        Self::new(name, 1.0, true, move |p| {
            let v = phi_value(spec.horizontal_distance(p.theta), delta);
            k.map_or(v, |k| v.min(k))
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_base_only(&self) -> bool {
        self.base_only
    }

    pub fn holder_norm(&self) -> Option<f64> {
        self.holder_norm
    }

    pub fn with_holder_norm(mut self, norm: f64) -> Self {
        self.holder_norm = Some(norm);
        self
    }

    pub fn mean_estimate(&self) -> Option<(f64, f64)> {
        self.mean_estimate
    }

    pub fn with_mean_estimate(mut self, mean: f64, stderr: f64) -> Self {
        self.mean_estimate = Some((mean, stderr));
        self
    }

    /// `λ·φ`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            name: format!("{}*{}", lambda, self.name),
            eval: Arc::new(move |p| lambda * inner(p)),
            holder_norm: self.holder_norm.map(|n| n * lambda.abs()),
            mean_estimate: None,
            ..self.clone()
        }
    }

    #[inline]
    pub fn eval(&self, p: PhasePoint) -> f64 {
        (self.eval)(p)
    }
}

#[inline]
pub fn phi_value(d: f64, delta: f64) -> f64 {
    if d < delta {
        -d.ln()
    } else if d < 2.0 * delta {
        delta.ln() / delta * (d - 2.0 * delta)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderEstimate {
    pub sup: f64,
    pub seminorm: f64,
    /// `sup + seminorm`.
    pub norm: f64,
    pub gamma: f64,
    /// Grid intervals per axis.
    pub resolution: usize,
}

pub const DEFAULT_HOLDER_RESOLUTION: usize = 256;

/// Grid lower bound for `‖φ‖_{H_γ} = sup|φ| + sup |φ(y₁) − φ(y₂)| / d(y₁, y₂)^γ`.
///
/// The grid has `resolution` intervals per axis (closed axes include both
/// endpoints; the circle omits the duplicate `θ = 1`), and quotients are
/// taken over pairs at dyadic separations along each axis and the diagonal.
/// Doubling the resolution evaluates a superset of pairs, so the estimate is
/// nondecreasing under refinement.
pub fn estimate_holder_norm(
    spec: &SkewProductSpec,
    obs: &Observable,
    gamma: f64,
    resolution: usize,
) -> Result<HolderEstimate> {
    if resolution < 64 {
        return Err(Error::param("resolution", format!("{resolution} < 64")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::param("gamma", format!("{gamma} outside (0, 1]")));
    }
    let (t_lo, t_hi) = spec.base_domain();
    let (j_lo, j_hi) = spec.fiber_interval();
    let circle = spec.is_circle();
    let nt = if circle { resolution } else { resolution + 1 };
    let nx = if obs.is_base_only() { 1 } else { resolution + 1 };
    let theta = |i: usize| t_lo + (t_hi - t_lo) * (i as f64) / resolution as f64;
    let xv = |j: usize| {
        if nx == 1 {
            0.5 * (j_lo + j_hi)
        } else {
            j_lo + (j_hi - j_lo) * (j as f64) / resolution as f64
        }
    };
    let mut values = vec![0.0; nt * nx];
    for i in 0..nt {
        for j in 0..nx {
            values[i * nx + j] = obs.eval(PhasePoint::new(theta(i), xv(j)));
        }
    }
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut seminorm = 0.0f64;
    let mut step = 1;
    while step <= resolution {
        for i in 0..nt {
            for j in 0..nx {
                let p = PhasePoint::new(theta(i), xv(j));
                let v = values[i * nx + j];
                let i2 = if circle { Some((i + step) % nt) } else { (i + step < nt).then_some(i + step) };
                let j2 = (j + step < nx).then_some(j + step);
                let mut visit = |ii: usize, jj: usize| {
                    let q = PhasePoint::new(theta(ii), xv(jj));
                    let d = spec.distance(p, q);
                    if d > 0.0 {
                        seminorm = seminorm.max((v - values[ii * nx + jj]).abs() / d.powf(gamma));
                    }
                };
                if let Some(ii) = i2 {
                    visit(ii, j);
                }
                if let Some(jj) = j2 {
                    visit(i, jj);
                    if let Some(ii) = i2 {
                        visit(ii, jj);
                    }
                }
            }
        }
        step *= 2;
    }
    Ok(HolderEstimate {
        sup,
        seminorm,
        norm: sup + seminorm,
        gamma,
        resolution,
    })
}

/// Grid estimate of `sup|φ|` at the default resolution.
pub fn estimate_sup_norm(spec: &SkewProductSpec, obs: &Observable) -> f64 {
    estimate_holder_norm(spec, obs, 1.0, DEFAULT_HOLDER_RESOLUTION)
        .map(|h| h.sup)
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_f1, DEFAULT_MISIUREWICZ_A};

    fn f1() -> SkewProductSpec {
        make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 2.0).unwrap()
    }

    #[test]
    fn constant_norm() {
        let h = estimate_holder_norm(&f1(), &Observable::constant(-3.0), 1.0, 64).unwrap();
        assert_eq!(h.seminorm, 0.0);
        assert_eq!(h.norm, 3.0);
    }

    #[test]
    fn linear_fiber_norm() {
        let s = f1();
        let h = estimate_holder_norm(&s, &Observable::fiber(), 1.0, 64).unwrap();
        let (lo, hi) = s.fiber_interval();
        assert!((h.sup - lo.abs().max(hi.abs())).abs() < 1e-12);
        assert!((h.seminorm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refinement_is_monotone() {
        let s = f1();
        let obs = Observable::generic();
        let a = estimate_holder_norm(&s, &obs, 0.5, 64).unwrap();
        let b = estimate_holder_norm(&s, &obs, 0.5, 128).unwrap();
        assert!(b.norm >= a.norm);
    }

    #[test]
    fn phi_branches() {
        let s = f1();
        let delta = 0.01;
        let phi = Observable::phi(&s, delta, None).unwrap();
        assert_eq!(phi.eval(PhasePoint::new(0.3, 0.0)), 0.0);
        assert!((phi_value(delta, delta) + delta.ln()).abs() < 1e-12);
        assert_eq!(phi.eval(PhasePoint::new(0.001, 0.0)), -(0.001f64).ln());
        let phik = Observable::phi(&s, delta, Some(5.0)).unwrap();
        assert_eq!(phik.eval(PhasePoint::new(1e-4, 0.0)), 5.0);
        assert!(Observable::phi(&s, 0.6, None).is_err());
    }
}
