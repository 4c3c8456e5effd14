//! Empirical scan of the non-degeneracy conditions near the singular set:
//!
//! * (S1) `d^ξ / B ≤ ‖DF v‖/‖v‖ ≤ B d^{−ξ}`
//! * (S2) `|log‖DF(y₁)⁻¹‖ − log‖DF(y₂)⁻¹‖| ≤ B |y₁ − y₂| / d^ξ`
//! * (S3) the same with `log|det DF⁻¹|`
//!
//! where `d = dist(y₁, 𝒮)` and `|y₁ − y₂| < d/2`.  Points are placed at
//! dyadic distances from every singular component; a condition is violated
//! when its worst ratio keeps growing as the distance shrinks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{singular_values, PhasePoint, SingularPart, SkewProductSpec};

const SCAN_SEED: u64 = 0x5eed_0001;
const COARSEST: f64 = 1.0 / 16.0;
const GROWTH_SLOPE: f64 = 0.1;
const GROWTH_FACTOR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `d^ξ / σ_min`
    S1Lower,
    /// `σ_max · d^ξ`
    S1Upper,
    /// `|Δ log σ_min| · d^ξ / |y₁ − y₂|`
    S2,
    /// `|Δ log|det|| · d^ξ / |y₁ − y₂|`
    S3,
}

impl Condition {
    pub const ALL: [Condition; 4] = [Condition::S1Lower, Condition::S1Upper, Condition::S2, Condition::S3];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyViolation {
    pub condition: Condition,
    pub point: PhasePoint,
    pub dist: f64,
    pub ratio: f64,
}

/// Worst ratio per condition at one dyadic distance.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSummary {
    pub scale: f64,
    pub samples: usize,
    pub max_ratio: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NondegeneracyReport {
    pub xi: f64,
    pub b_hat: f64,
    pub violations: Vec<NondegeneracyViolation>,
    pub levels: Vec<LevelSummary>,
}

impl NondegeneracyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.b_hat.is_finite()
    }
}

/// Scan at the exponent the theory predicts: `ξ = 1` for `F1`, `ξ = 2` for `F2`.
pub fn nondegeneracy_scan(spec: &SkewProductSpec, samples: usize, floor: f64) -> NondegeneracyReport {
    let xi = if spec.is_circle() { 1.0 } else { 2.0 };
    nondegeneracy_scan_with_xi(spec, xi, samples, floor)
}

struct Sample {
    point: PhasePoint,
    dist: f64,
    ratios: [f64; 4],
}

pub fn nondegeneracy_scan_with_xi(
    spec: &SkewProductSpec,
    xi: f64,
    samples: usize,
    floor: f64,
) -> NondegeneracyReport {
    let floor = floor.max(f64::MIN_POSITIVE);
    let mut scales = Vec::new();
    let mut d = COARSEST;
    while d >= floor {
        scales.push(d);
        d *= 0.5;
    }
    if scales.is_empty() {
        scales.push(floor);
    }

    let lines = spec.singular_set().horizontal_lines.clone();
    let level_v = spec.singular_set().vertical_level;
    // placements: each line, the vertical line, each corner
    let placements = 2 * lines.len() + 1;
    let per = samples.div_ceil(scales.len() * placements).max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(SCAN_SEED);
    let (t_lo, t_hi) = spec.base_domain();
    let (j_lo, j_hi) = spec.fiber_interval();

    let mut per_level: Vec<Vec<Sample>> = Vec::with_capacity(scales.len());
    for &scale in &scales {
        let mut level = Vec::new();
        for placement in 0..placements {
            for _ in 0..per {
                let side = |rng: &mut ChaCha8Rng| if rng.random::<bool>() { 1.0 } else { -1.0 };
                let theta_any = t_lo + (t_hi - t_lo) * rng.random::<f64>();
                let x_any = j_lo + (j_hi - j_lo) * rng.random::<f64>();
                let p = if placement < lines.len() {
                    PhasePoint::new(lines[placement] + side(&mut rng) * scale, x_any)
                } else if placement == lines.len() {
                    PhasePoint::new(theta_any, level_v + side(&mut rng) * scale)
                } else {
                    let b = lines[placement - lines.len() - 1];
                    PhasePoint::new(b + side(&mut rng) * scale, level_v + side(&mut rng) * scale)
                };
                let p = wrap(spec, p);
                if !spec.contains(p) {
                    continue;
                }
                if let Some(s) = evaluate(spec, p, xi, &mut rng) {
                    level.push(s);
                }
            }
        }
        per_level.push(level);
    }

    let levels: Vec<LevelSummary> = scales
        .iter()
        .zip(&per_level)
        .map(|(&scale, level)| {
            let mut max_ratio = [0.0f64; 4];
            for s in level {
                for (m, r) in max_ratio.iter_mut().zip(s.ratios) {
                    *m = m.max(r);
                }
            }
            LevelSummary {
                scale,
                samples: level.len(),
                max_ratio,
            }
        })
        .collect();

    let b_hat = levels
        .iter()
        .flat_map(|l| l.max_ratio)
        .fold(1.0f64, |b, r| if r.is_nan() { f64::INFINITY } else { b.max(r) });

    let mut violations = Vec::new();
    if levels.len() >= 4 {
        let half = levels.len() / 2;
        for cond in Condition::ALL {
            let c = cond.index();
            let coarse_max = levels[..half].iter().map(|l| l.max_ratio[c]).fold(0.0, f64::max);
            let fine = &levels[half..];
            let xs: Vec<f64> = fine.iter().map(|l| (1.0 / l.scale).ln()).collect();
            let ys: Vec<f64> = fine.iter().map(|l| l.max_ratio[c].max(f64::MIN_POSITIVE).ln()).collect();
            let slope = ls_slope(&xs, &ys);
            let finest = fine.last().map_or(0.0, |l| l.max_ratio[c]);
            if slope > GROWTH_SLOPE && finest > GROWTH_FACTOR * coarse_max {
                let bar = GROWTH_FACTOR * coarse_max;
                for s in per_level[half..].iter().flatten() {
                    if s.ratios[c] > bar {
                        violations.push(NondegeneracyViolation {
                            condition: cond,
                            point: s.point,
                            dist: s.dist,
                            ratio: s.ratios[c],
                        });
                    }
                }
            }
        }
    }

    NondegeneracyReport {
        xi,
        b_hat,
        violations,
        levels,
    }
}

fn wrap(spec: &SkewProductSpec, p: PhasePoint) -> PhasePoint {
    if spec.is_circle() {
        PhasePoint::new(p.theta - p.theta.floor(), p.x)
    } else {
        p
    }
}

fn log_singular(spec: &SkewProductSpec, p: PhasePoint) -> Option<(f64, f64, f64)> {
    let m = spec.jacobian(p);
    let (s_max, s_min) = singular_values(m);
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
    let out = (s_max, s_min.ln(), det.ln());
    (out.1.is_finite() && out.2.is_finite()).then_some(out)
}

fn evaluate(spec: &SkewProductSpec, p: PhasePoint, xi: f64, rng: &mut ChaCha8Rng) -> Option<Sample> {
    let dist = spec.dist_to_singular(p, SingularPart::Full);
    if !(dist > 0.0) {
        return None;
    }
    let (s_max, log_min, log_det) = log_singular(spec, p)?;
    let dxi = dist.powf(xi);
    let mut ratios = [dxi / log_min.exp(), s_max * dxi, 0.0, 0.0];

    for _ in 0..8 {
        let r = 0.49 * dist * (1.0 - rng.random::<f64>());
        let phi = std::f64::consts::TAU * rng.random::<f64>();
        let q = wrap(spec, PhasePoint::new(p.theta + r * phi.cos(), p.x + r * phi.sin()));
        if !spec.contains(q) {
            continue;
        }
        let sep = spec.distance(p, q);
        if !(sep > 0.0) {
            continue;
        }
        let (_, log_min2, log_det2) = log_singular(spec, q)?;
        ratios[Condition::S2.index()] = (log_min - log_min2).abs() * dxi / sep;
        ratios[Condition::S3.index()] = (log_det - log_det2).abs() * dxi / sep;
        break;
    }
    Some(Sample { point: p, dist, ratios })
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::super::{make_f1, make_f2_default, DEFAULT_MISIUREWICZ_A};
    use super::*;

    #[test]
    fn f1_passes_at_one() {
        let s = make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 2.0).unwrap();
        let r = nondegeneracy_scan(&s, 2000, 1e-8);
        assert_eq!(r.xi, 1.0);
        assert!(r.passed(), "{:?}", r.violations.first());
    }

    #[test]
    fn f2_passes_at_two() {
        let s = make_f2_default(DEFAULT_MISIUREWICZ_A, 2, DEFAULT_MISIUREWICZ_A, 0.005).unwrap();
        let r = nondegeneracy_scan(&s, 2000, 1e-8);
        assert_eq!(r.xi, 2.0);
        assert!(r.passed(), "{:?}", r.violations.first());
    }

    #[test]
    fn f1_fails_at_half_near_vertical_line() {
        let s = make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 2.0).unwrap();
        let r = nondegeneracy_scan_with_xi(&s, 0.5, 2000, 1e-8);
        assert!(!r.violations.is_empty());
        assert!(r.violations.iter().any(|v| v.point.x.abs() <= v.dist * (1.0 + 1e-9)));
    }
}
