//! Occupancy-grid approximation of the attractor `Λ = ⋂ Fⁿ(M)`, which for
//! these maps equals `F²(M)`, and a grid-level transitivity check: how much
//! of `Λ` the forward images of a small ball have visited after `n` steps.

use std::fmt::Write as _;

use rand::Rng;

use crate::ensemble::{derive_seed, map_members, member_rng};
use crate::error::{Error, Result};
use crate::maps::{PhasePoint, SkewProductSpec};
use crate::orbit::Orbit;
use crate::ulam::Axis;

pub const COVERAGE_THRESHOLD: f64 = 0.99;
const REFRESH_TAG: u64 = 0x7a11;

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub theta: Axis,
    pub x: Axis,
    /// Row-major by `θ` cell.
    pub occupied: Vec<bool>,
    /// Iterate whose image was recorded.
    pub generation: u32,
    pub samples: usize,
    pub seed: u64,
}

impl OccupancyGrid {
    pub fn cells(&self) -> usize {
        self.occupied.len()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn cell_of(&self, p: PhasePoint) -> Option<usize> {
        Some(self.theta.locate(p.theta)? * self.x.cells + self.x.locate(p.x)?)
    }

    pub fn is_occupied(&self, i: usize, j: usize) -> bool {
        self.occupied[i * self.x.cells + j]
    }

    /// Cell diameter in the phase-space metric.
    pub fn cell_diameter(&self) -> f64 {
        self.theta.width().hypot(self.x.width())
    }

    /// Occupancy dilated by `r` cells in each direction (wrapping in `θ` on
    /// the circle).
    pub fn dilated(&self, r: usize, circle: bool) -> Vec<bool> {
        let (nt, nx) = (self.theta.cells as isize, self.x.cells as isize);
        let r = r as isize;
        let mut out = vec![false; self.occupied.len()];
        for i in 0..nt {
            for j in 0..nx {
                if !self.occupied[(i * nx + j) as usize] {
                    continue;
                }
                for di in -r..=r {
                    let ii = if circle { (i + di).rem_euclid(nt) } else { i + di };
                    if !(0..nt).contains(&ii) {
                        continue;
                    }
                    for dj in -r..=r {
                        let jj = j + dj;
                        if (0..nx).contains(&jj) {
                            out[(ii * nx + jj) as usize] = true;
                        }
                    }
                }
            }
        }
        out
    }

    /// `theta_index,x_index,theta_left,x_left,occupied`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("theta_index,x_index,theta_left,x_left,occupied\n");
        for i in 0..self.theta.cells {
            for j in 0..self.x.cells {
                let _ = writeln!(
                    s,
                    "{i},{j},{},{},{}",
                    self.theta.left(i),
                    self.x.left(j),
                    u8::from(self.is_occupied(i, j))
                );
            }
        }
        s
    }

    /// One `<rect>` per occupied cell, `θ` to the right and `x` upwards.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 480.0;
        let cw = W / self.theta.cells as f64;
        let ch = H / self.x.cells as f64;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" width=\"{W}\" height=\"{H}\">\n\
             <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n<g fill=\"black\" shape-rendering=\"crispEdges\">\n"
        );
        for i in 0..self.theta.cells {
            for j in 0..self.x.cells {
                if self.is_occupied(i, j) {
                    let y = H - (j + 1) as f64 * ch;
                    let _ = writeln!(
                        s,
                        "<rect x=\"{:.3}\" y=\"{:.3}\" width=\"{:.3}\" height=\"{:.3}\"/>",
                        i as f64 * cw,
                        y,
                        cw,
                        ch
                    );
                }
            }
        }
        s.push_str("</g>\n</svg>\n");
        s
    }
}

/// Sample `i` of the Lebesgue-uniform family on `base × J` shared by the grid
/// and by balls that cover all of `M`.
fn box_sample(rng: &mut impl Rng, theta: (f64, f64), x: (f64, f64)) -> PhasePoint {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    PhasePoint::new(theta.0 + (theta.1 - theta.0) * u, x.0 + (x.1 - x.0) * v)
}

/// Marks the cells hit by `F²(y)` for `samples` Lebesgue-uniform `y`.
pub fn attractor_grid(
    spec: &SkewProductSpec,
    resolution: (usize, usize),
    samples: usize,
    seed: u64,
) -> Result<OccupancyGrid> {
    let (nt, nx) = resolution;
    if nt == 0 || nx == 0 {
        return Err(Error::param("resolution", "must be positive"));
    }
    if samples < 10 * nt * nx {
        return Err(Error::param(
            "samples",
            format!("{samples} < 10 x {} cells", nt * nx),
        ));
    }
    let base = spec.base_domain();
    let fiber = spec.fiber_interval();
    let theta = Axis::new(base.0, base.1, nt);
    let x = Axis::new(fiber.0, fiber.1, nx);
    let hits = map_members(samples, |i| {
        let y = box_sample(&mut member_rng(seed, i), base, fiber);
        let image = spec.apply(spec.apply(y));
        Some(theta.locate(image.theta)? * nx + x.locate(image.x)?)
    });
    let mut occupied = vec![false; nt * nx];
    for h in hits.into_iter().flatten() {
        occupied[h] = true;
    }
    Ok(OccupancyGrid {
        theta,
        x,
        occupied,
        generation: 2,
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitivityResult {
    pub eps: f64,
    pub center: PhasePoint,
    /// Cumulative fraction of occupied cells visited by `F^m(B)`, `m ≤ n`,
    /// indexed by `n = 0..=n_max`.
    pub coverage: Vec<f64>,
    /// First `n` with coverage at least the threshold.
    pub n0: Option<u64>,
    pub threshold: f64,
    /// Ball points actually iterated (draws falling inside the ball).
    pub ball_points: usize,
    pub draws: usize,
}

/// Iterates `draws` candidate points of the `ε`-ball around `center`
/// (rejection from the ball's bounding box clipped to `base × J`).
///
/// Draw `i` uses the same stream as sample `i` of the grid; when the ball
/// contains all of `M` the bounding box is `base × J` itself, so the ball
/// points are exactly the grid samples and coverage at `n = 2` is 1
/// whenever `draws ≥ grid.samples`.  The first two steps use the literal map,
/// later ones a refreshed orbit.
pub fn transitivity_check(
    spec: &SkewProductSpec,
    grid: &OccupancyGrid,
    center: PhasePoint,
    eps: f64,
    n_max: u64,
    draws: usize,
    threshold: f64,
) -> Result<TransitivityResult> {
    if !(eps > grid.cell_diameter()) {
        return Err(Error::param(
            "eps",
            format!("{eps} must exceed the cell diameter {}", grid.cell_diameter()),
        ));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::param("threshold", format!("{threshold} outside (0, 1]")));
    }
    let total = grid.occupied_count();
    if total == 0 {
        return Err(Error::param("grid", "no occupied cells"));
    }
    let base = spec.base_domain();
    let fiber = spec.fiber_interval();
    let covers_base = if spec.is_circle() {
        2.0 * eps >= 1.0
    } else {
        center.theta - eps <= base.0 && center.theta + eps >= base.1
    };
    let theta_box = if covers_base {
        base
    } else if spec.is_circle() {
        (center.theta - eps, center.theta + eps)
    } else {
        ((center.theta - eps).max(base.0), (center.theta + eps).min(base.1))
    };
    let x_box = ((center.x - eps).max(fiber.0), (center.x + eps).min(fiber.1));
    let refresh_seed = derive_seed(grid.seed, REFRESH_TAG);

    let visits: Vec<Option<Vec<Option<usize>>>> = map_members(draws, |i| {
        let mut p = box_sample(&mut member_rng(grid.seed, i), theta_box, x_box);
        if spec.is_circle() {
            p.theta = p.theta.rem_euclid(1.0);
        }
        if spec.distance(p, center) > eps {
            return None;
        }
        let mut cells = Vec::with_capacity(n_max as usize + 1);
        cells.push(grid.cell_of(p));
        for _ in 0..n_max.min(2) {
            p = spec.apply(p);
            cells.push(grid.cell_of(p));
        }
        if n_max > 2 {
            let mut orbit = Orbit::from_point_refreshed(spec, p, member_rng(refresh_seed, i));
            for _ in 2..n_max {
                match orbit.step() {
                    Ok(q) => cells.push(grid.cell_of(q)),
                    Err(_) => break,
                }
            }
        }
        Some(cells)
    });

    let mut visited = vec![false; grid.cells()];
    let mut count = 0usize;
    let mut coverage = Vec::with_capacity(n_max as usize + 1);
    let ball_points = visits.iter().filter(|v| v.is_some()).count();
    for n in 0..=n_max as usize {
        for cells in visits.iter().flatten() {
            if let Some(Some(c)) = cells.get(n) {
                if grid.occupied[*c] && !visited[*c] {
                    visited[*c] = true;
                    count += 1;
                }
            }
        }
        coverage.push(count as f64 / total as f64);
    }
    let n0 = coverage.iter().position(|&c| c >= threshold).map(|n| n as u64);
    Ok(TransitivityResult {
        eps,
        center,
        coverage,
        n0,
        threshold,
        ball_points,
        draws,
    })
}

/// Euclidean diameter of `base × J` (on the circle the base contributes 1/2).
pub fn phase_space_diameter(spec: &SkewProductSpec) -> f64 {
    let (lo, hi) = spec.base_domain();
    let (j_lo, j_hi) = spec.fiber_interval();
    let base = if spec.is_circle() { 0.5 } else { hi - lo };
    base.hypot(j_hi - j_lo)
}

/// Centre of `base × J`.
pub fn default_center(spec: &SkewProductSpec) -> PhasePoint {
    let (lo, hi) = spec.base_domain();
    let (j_lo, j_hi) = spec.fiber_interval();
    PhasePoint::new(0.5 * (lo + hi), 0.5 * (j_lo + j_hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_f1, make_f2_default, DEFAULT_MISIUREWICZ_A};

    fn f1() -> SkewProductSpec {
        make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 2.0).unwrap()
    }

    #[test]
    fn sample_images_are_occupied() {
        let s = f1();
        let g = attractor_grid(&s, (32, 32), 20_000, 4).unwrap();
        for i in 0..500 {
            let y = box_sample(&mut member_rng(4, i), s.base_domain(), s.fiber_interval());
            let c = g.cell_of(s.apply(s.apply(y))).unwrap();
            assert!(g.occupied[c]);
        }
        assert!(attractor_grid(&s, (32, 32), 1000, 4).is_err());
    }

    #[test]
    fn forward_image_stays_in_dilated_grid() {
        for s in [f1(), make_f2_default(DEFAULT_MISIUREWICZ_A, 2, DEFAULT_MISIUREWICZ_A, 0.005).unwrap()] {
            let g = attractor_grid(&s, (48, 48), 200_000, 9).unwrap();
            let halo = g.dilated(1, s.is_circle());
            for i in 0..20_000 {
                let y = box_sample(&mut member_rng(9, i), s.base_domain(), s.fiber_interval());
                let c = g.cell_of(s.apply(s.apply(s.apply(y)))).unwrap();
                assert!(halo[c], "{:?}", s.kind());
            }
        }
    }

    #[test]
    fn covering_ball_fills_grid_at_two() {
        let s = f1();
        let g = attractor_grid(&s, (32, 32), 20_000, 5).unwrap();
        let eps = phase_space_diameter(&s);
        let t = transitivity_check(&s, &g, default_center(&s), eps, 4, 20_000, COVERAGE_THRESHOLD).unwrap();
        assert_eq!(t.coverage[2], 1.0);
    }

    #[test]
    fn coverage_is_monotone_and_nested() {
        let s = f1();
        let g = attractor_grid(&s, (32, 32), 20_000, 6).unwrap();
        let c = default_center(&s);
        let a = transitivity_check(&s, &g, c, 0.1, 40, 500, COVERAGE_THRESHOLD).unwrap();
        let b = transitivity_check(&s, &g, c, 0.1, 40, 1000, COVERAGE_THRESHOLD).unwrap();
        assert!(a.coverage.windows(2).all(|w| w[0] <= w[1]));
        assert!(a.coverage.iter().zip(&b.coverage).all(|(x, y)| x <= y));
        assert!(a.coverage.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
