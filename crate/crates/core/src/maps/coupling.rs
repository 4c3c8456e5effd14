use std::fmt;
use std::sync::Arc;

/// Coupling function `s : I → [−1, 1]` for the quadratic-base map.
///
/// Implementations declare the points where `s` fails to be `C²`; those
/// become horizontal lines of the singular set.
pub trait Coupling: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;
    fn value(&self, theta: f64) -> f64;
    fn derivative(&self, theta: f64) -> f64;
    fn singular_points(&self) -> Vec<f64>;
}

/// `s(θ) = (2/π)·arcsin(2(θ − θ_mid)/|I|)`: `C²` inside `I` with square-root
/// derivative blow-up at both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcsinCoupling {
    lo: f64,
    hi: f64,
}

impl ArcsinCoupling {
    pub const ID: &'static str = "arcsin";

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    #[inline]
    fn scaled(&self, theta: f64) -> f64 {
        let mid = 0.5 * (self.lo + self.hi);
        (2.0 * (theta - mid) / (self.hi - self.lo)).clamp(-1.0, 1.0)
    }
}

impl Coupling for ArcsinCoupling {
    fn id(&self) -> &str {
        Self::ID
    }

    fn value(&self, theta: f64) -> f64 {
        std::f64::consts::FRAC_2_PI * self.scaled(theta).asin()
    }

    fn derivative(&self, theta: f64) -> f64 {
        let u = self.scaled(theta);
        let du = 2.0 / (self.hi - self.lo);
        std::f64::consts::FRAC_2_PI * du / (1.0 - u * u).sqrt()
    }

    fn singular_points(&self) -> Vec<f64> {
        vec![self.lo, self.hi]
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Coupling assembled from closures.
#[derive(Clone)]
pub struct FnCoupling {
    id: String,
    value: RealFn,
    derivative: RealFn,
    singular: Vec<f64>,
}

impl FnCoupling {
    pub fn new(
        id: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        singular: Vec<f64>,
    ) -> Self {
        Self {
            id: id.into(),
            value: Arc::new(value),
            derivative: Arc::new(derivative),
            singular,
        }
    }
}

impl fmt::Debug for FnCoupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnCoupling")
            .field("id", &self.id)
            .field("singular", &self.singular)
            .finish_non_exhaustive()
    }
}

impl Coupling for FnCoupling {
    fn id(&self) -> &str {
        &self.id
    }

    fn value(&self, theta: f64) -> f64 {
        (self.value)(theta)
    }

    fn derivative(&self, theta: f64) -> f64 {
        (self.derivative)(theta)
    }

    fn singular_points(&self) -> Vec<f64> {
        self.singular.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcsin_coupling_range_and_symmetry() {
        let s = ArcsinCoupling::new(-0.5, 1.5);
        assert_eq!(s.value(-0.5), -1.0);
        assert_eq!(s.value(1.5), 1.0);
        assert_eq!(s.value(0.5), 0.0);
        assert!(s.derivative(1.5 - 1e-12) > 1e4);
    }

    #[test]
    fn arcsin_derivative_matches_difference_quotient() {
        let s = ArcsinCoupling::new(-0.8, 1.5);
        for &t in &[-0.3, 0.1, 0.7, 1.2] {
            let h = 1e-6;
            let fd = (s.value(t + h) - s.value(t - h)) / (2.0 * h);
            assert!((fd - s.derivative(t)).abs() < 1e-7 * fd.abs().max(1.0));
        }
    }
}
