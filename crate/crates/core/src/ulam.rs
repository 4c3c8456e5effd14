//! Ulam discretization of transfer operators.
//!
//! One-dimensional operators for the base maps are built from exact
//! preimage intersections; the two-dimensional operator of the skew product
//! uses stratified sampling, since fiber preimages have no closed form.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;

use crate::ensemble::{member_rng, PairwiseSum};
use crate::error::{Error, Result};
use crate::maps::{critical_points, quadratic, quadratic_iterate, BaseMap, PhasePoint, SkewProductSpec};

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_MAX_ITER: usize = 100_000;
const PARRY_CUTOFF: f64 = 1e-15;
const PARRY_SNAP: f64 = 1e-12;
const MAX_REFINE: u32 = 12;

/// Base dynamics selector for the 1-D operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseSelector {
    Beta { beta: f64 },
    Quadratic { b: f64, k: u32 },
}

impl BaseSelector {
    pub fn of(spec: &SkewProductSpec) -> Self {
        match spec.base() {
            BaseMap::Beta { beta } => BaseSelector::Beta { beta: *beta },
            BaseMap::Quadratic { b, k, .. } => BaseSelector::Quadratic { b: *b, k: *k },
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        match *self {
            BaseSelector::Beta { .. } => (0.0, 1.0),
            BaseSelector::Quadratic { b, .. } => (quadratic(b, b), b),
        }
    }
}

/// Uniform partition into half-open cells `[l, r)` (the last one closed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, cells: usize) -> Self {
        Self { lo, hi, cells }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.cells as f64
    }

    pub fn left(&self, i: usize) -> f64 {
        self.lo + (self.hi - self.lo) * i as f64 / self.cells as f64
    }

    pub fn right(&self, i: usize) -> f64 {
        if i + 1 == self.cells {
            self.hi
        } else {
            self.left(i + 1)
        }
    }

    /// Cell index of `x`; boundary ties go right, `hi` goes to the last cell.
    #[inline]
    pub fn locate(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let mut i = (((x - self.lo) / (self.hi - self.lo)) * self.cells as f64) as usize;
        i = i.min(self.cells - 1);
        // correct rounding of the scaled index against the stored edges
        if x < self.left(i) {
            i -= 1;
        } else if i + 1 < self.cells && x >= self.left(i + 1) {
            i += 1;
        }
        Some(i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Partition {
    Base(Axis),
    Product { theta: Axis, x: Axis },
}

impl Partition {
    pub fn len(&self) -> usize {
        match self {
            Partition::Base(a) => a.cells,
            Partition::Product { theta, x } => theta.cells * x.cells,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lebesgue measure of a cell.
    pub fn cell_measure(&self) -> f64 {
        match self {
            Partition::Base(a) => a.width(),
            Partition::Product { theta, x } => theta.width() * x.width(),
        }
    }
}

/// Row-stochastic sparse matrix over a partition, with its transpose kept
/// for parallel left multiplication.
#[derive(Debug, Clone)]
pub struct UlamOperator {
    pub partition: Partition,
    rows: Vec<Vec<(u32, f64)>>,
    cols: Vec<Vec<(u32, f64)>>,
    /// Per-row sampling noise (largest binomial standard error of an entry);
    /// `None` for exact constructions.
    pub row_stderr: Option<Vec<f64>>,
}

impl UlamOperator {
    pub fn from_rows(partition: Partition, rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        if rows.len() != partition.len() {
            return Err(Error::param("rows", "row count does not match the partition"));
        }
        let n = rows.len();
        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                if j as usize >= n || !(v >= 0.0) {
                    return Err(Error::param("rows", format!("bad entry ({i}, {j}) = {v}")));
                }
                cols[j as usize].push((i as u32, v));
            }
        }
        Ok(Self {
            partition,
            rows,
            cols,
            row_stderr: None,
        })
    }

    pub fn identity(partition: Partition) -> Self {
        let rows = (0..partition.len()).map(|i| vec![(i as u32, 1.0)]).collect();
        Self::from_rows(partition, rows).expect("identity is well formed")
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().filter(|e| e.0 as usize == j).map(|e| e.1).sum()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Largest `|Σ_j P_ij − 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `v ↦ vP`, deterministic and parallel over output cells.
    pub fn left_mul(&self, v: &[f64]) -> Vec<f64> {
        self.cols
            .par_iter()
            .map(|col| col.iter().map(|&(i, p)| v[i as usize] * p).sum())
            .collect()
    }
}

fn normalize_row(row: &mut Vec<(u32, f64)>) {
    row.sort_by_key(|e| e.0);
    row.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 += b.1;
            true
        } else {
            false
        }
    });
    row.retain(|e| e.1 > 0.0);
    let s: f64 = row.iter().map(|e| e.1).sum();
    if s > 0.0 {
        for e in row.iter_mut() {
            e.1 /= s;
        }
    }
}

/// Exact Ulam matrix of `θ ↦ βθ mod 1` or `θ ↦ Q_b^k(θ)` on `n` cells.
pub fn build_ulam_base(base: BaseSelector, n: usize) -> Result<UlamOperator> {
    if n < 2 {
        return Err(Error::param("cells", format!("need at least 2 cells, got {n}")));
    }
    let (lo, hi) = base.domain();
    let axis = Axis::new(lo, hi, n);
    let rows: Vec<Result<Vec<(u32, f64)>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = match base {
                BaseSelector::Beta { beta } => {
                    if !(beta > 1.0) {
                        return Err(Error::param("beta", format!("{beta} must be > 1")));
                    }
                    beta_row(&axis, beta, i)
                }
                BaseSelector::Quadratic { b, k } => quadratic_row(&axis, b, k, i)?,
            };
            normalize_row(&mut row);
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    UlamOperator::from_rows(Partition::Base(axis), rows)
}

fn spread(axis: &Axis, u: f64, v: f64, weight: f64, row: &mut Vec<(u32, f64)>) {
    if !(v > u) {
        return;
    }
    let first = axis.locate(u).unwrap_or(0);
    for j in first..axis.cells {
        let (l, r) = (axis.left(j), axis.right(j));
        if l >= v {
            break;
        }
        let overlap = v.min(r) - u.max(l);
        if overlap > 0.0 {
            row.push((j as u32, overlap * weight));
        }
    }
}

fn beta_row(axis: &Axis, beta: f64, i: usize) -> Vec<(u32, f64)> {
    let (l, r) = (axis.left(i), axis.right(i));
    let weight = 1.0 / (beta * (r - l));
    let mut row = Vec::new();
    let (a, b) = (beta * l, beta * r);
    let mut m = a.floor();
    while m < b {
        let u = (a - m).max(0.0);
        let v = (b - m).min(1.0);
        spread(axis, u, v, weight, &mut row);
        m += 1.0;
    }
    row
}

fn quadratic_row(axis: &Axis, b: f64, k: u32, i: usize) -> Result<Vec<(u32, f64)>> {
    let (l, r) = (axis.left(i), axis.right(i));
    let mut cuts = vec![l];
    cuts.extend(critical_points(b, k, l, r).into_iter().filter(|&c| c > l && c < r));
    cuts.push(r);
    let mut row = Vec::new();
    for w in cuts.windows(2) {
        monotone_piece(axis, b, k, w[0], w[1], r - l, 0, &mut row)?;
    }
    Ok(row)
}

#[allow(clippy::too_many_arguments)]
fn monotone_piece(
    axis: &Axis,
    b: f64,
    k: u32,
    p: f64,
    q: f64,
    cell_len: f64,
    depth: u32,
    row: &mut Vec<(u32, f64)>,
) -> Result<()> {
    let g = |t: f64| quadratic_iterate(b, t, k).clamp(axis.lo, axis.hi);
    let (gp, gq) = (g(p), g(q));
    let increasing = gq >= gp;
    // monotonicity probe; refine on failure
    let probes = 8;
    let mut prev = gp;
    let mut monotone = true;
    for s in 1..=probes {
        let t = p + (q - p) * s as f64 / probes as f64;
        let gt = g(t);
        if (increasing && gt < prev - 1e-15) || (!increasing && gt > prev + 1e-15) {
            monotone = false;
            break;
        }
        prev = gt;
    }
    if !monotone {
        if depth >= MAX_REFINE {
            return Err(Error::BranchEnumeration { lo: p, hi: q });
        }
        let mid = 0.5 * (p + q);
        monotone_piece(axis, b, k, p, mid, cell_len, depth + 1, row)?;
        return monotone_piece(axis, b, k, mid, q, cell_len, depth + 1, row);
    }
    let (ylo, yhi) = if increasing { (gp, gq) } else { (gq, gp) };
    let weight = 1.0 / cell_len;
    if yhi <= ylo {
        // constant piece: all mass lands in one cell
        if let Some(j) = axis.locate(ylo) {
            row.push((j as u32, (q - p) * weight));
        }
        return Ok(());
    }
    // preimages of the cell edges inside (ylo, yhi)
    let inverse = |y: f64| {
        let (mut a, mut c) = (p, q);
        for _ in 0..200 {
            let m = 0.5 * (a + c);
            if m <= a || m >= c {
                break;
            }
            if (g(m) < y) == increasing {
                a = m;
            } else {
                c = m;
            }
        }
        0.5 * (a + c)
    };
    let j0 = axis.locate(ylo).unwrap_or(0);
    let j1 = axis.locate(yhi).unwrap_or(axis.cells - 1);
    let mut x_prev = if increasing { p } else { q };
    for j in j0..=j1 {
        let edge = axis.right(j);
        let x_next = if j == j1 || edge >= yhi {
            if increasing {
                q
            } else {
                p
            }
        } else {
            inverse(edge)
        };
        let len = (x_next - x_prev).abs();
        if len > 0.0 {
            row.push((j as u32, len * weight));
        }
        x_prev = x_next;
        if j == j1 || edge >= yhi {
            break;
        }
    }
    Ok(())
}

/// Sampled Ulam matrix of the skew product on `nθ × nx` cells of `base × J`,
/// with `s × s` jittered samples per cell.
pub fn build_ulam_2d(spec: &SkewProductSpec, ntheta: usize, nx: usize, s: usize, seed: u64) -> Result<UlamOperator> {
    if ntheta == 0 || nx == 0 || ntheta * nx > 1 << 22 {
        return Err(Error::param("cells", format!("{ntheta}×{nx} outside 1..=2^22")));
    }
    if s < 8 {
        return Err(Error::param("samples_per_side", format!("{s} < 8")));
    }
    let (t_lo, t_hi) = spec.base_domain();
    let (j_lo, j_hi) = spec.fiber_interval();
    let theta = Axis::new(t_lo, t_hi, ntheta);
    let x = Axis::new(j_lo, j_hi, nx);
    let per = (s * s) as f64;
    let built: Vec<(Vec<(u32, f64)>, f64)> = (0..ntheta * nx)
        .into_par_iter()
        .map(|cell| {
            let (it, ix) = (cell / nx, cell % nx);
            let mut rng = member_rng(seed, cell as u64);
            let mut row = Vec::with_capacity(s * s);
            let (tw, xw) = (theta.right(it) - theta.left(it), x.right(ix) - x.left(ix));
            for a in 0..s {
                for b in 0..s {
                    let p = PhasePoint::new(
                        theta.left(it) + tw * (a as f64 + rng.random::<f64>()) / s as f64,
                        x.left(ix) + xw * (b as f64 + rng.random::<f64>()) / s as f64,
                    );
                    let q = spec.apply(p);
                    if let (Some(jt), Some(jx)) = (theta.locate(q.theta), x.locate(q.x)) {
                        row.push(((jt * nx + jx) as u32, 1.0));
                    }
                }
            }
            normalize_row(&mut row);
            let noise = row
                .iter()
                .map(|e| (e.1 * (1.0 - e.1) / per).sqrt())
                .fold(0.0, f64::max);
            (row, noise)
        })
        .collect();
    let (rows, noise): (Vec<_>, Vec<_>) = built.into_iter().unzip();
    let mut op = UlamOperator::from_rows(Partition::Product { theta, x }, rows)?;
    op.row_stderr = Some(noise);
    Ok(op)
}

/// Cell-averaged probability density.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    pub partition: Partition,
    pub values: Vec<f64>,
    pub l1_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DensityVector {
    fn from_masses(partition: Partition, masses: &[f64], l1_residual: f64, iterations: usize, converged: bool) -> Self {
        let mut acc = PairwiseSum::new();
        masses.iter().for_each(|&m| acc.push(m));
        let total = acc.total();
        let cell = partition.cell_measure();
        Self {
            partition,
            values: masses.iter().map(|m| m / total / cell).collect(),
            l1_residual,
            iterations,
            converged,
        }
    }

    /// Cell masses `value · |cell|`.
    pub fn masses(&self) -> Vec<f64> {
        let cell = self.partition.cell_measure();
        self.values.iter().map(|v| v * cell).collect()
    }

    pub fn total_mass(&self) -> f64 {
        let mut acc = PairwiseSum::new();
        self.masses().into_iter().for_each(|m| acc.push(m));
        acc.total()
    }

    /// `∫|h₁ − h₂|` over a shared partition.
    pub fn l1_distance(&self, other: &DensityVector) -> f64 {
        let cell = self.partition.cell_measure();
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs() * cell).sum()
    }

    /// Marginal over `θ` of a product-partition density.
    pub fn theta_marginal(&self) -> Option<DensityVector> {
        let Partition::Product { theta, x } = self.partition else {
            return None;
        };
        let masses: Vec<f64> = (0..theta.cells)
            .map(|it| self.values[it * x.cells..(it + 1) * x.cells].iter().sum::<f64>() * self.partition.cell_measure())
            .collect();
        Some(DensityVector::from_masses(
            Partition::Base(theta),
            &masses,
            self.l1_residual,
            self.iterations,
            self.converged,
        ))
    }

    /// `cell_left,cell_right,value` rows of a 1-D density (base coordinate
    /// for product partitions, one row per `θ` cell of the marginal).
    pub fn to_csv(&self) -> String {
        let marginal;
        let (axis, values) = match self.partition {
            Partition::Base(a) => (a, &self.values),
            Partition::Product { .. } => {
                marginal = self.theta_marginal().expect("product partition");
                match marginal.partition {
                    Partition::Base(a) => (a, &marginal.values),
                    Partition::Product { .. } => unreachable!(),
                }
            }
        };
        let mut out = String::from("cell_left,cell_right,value\n");
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{:?},{:?},{:?}", axis.left(i), axis.right(i), v);
        }
        out
    }
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Power iteration `h ← hP` from the uniform vector.
pub fn stationary_density(op: &UlamOperator) -> DensityVector {
    stationary_density_with(op, POWER_TOL, POWER_MAX_ITER)
}

pub fn stationary_density_with(op: &UlamOperator, tol: f64, max_iter: usize) -> DensityVector {
    let n = op.len();
    let mut h = vec![1.0 / n as f64; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut next = op.left_mul(&h);
        let s: f64 = next.iter().sum();
        if s > 0.0 {
            next.iter_mut().for_each(|v| *v /= s);
        }
        iterations += 1;
        let change = l1(&next, &h);
        h = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    let residual = l1(&op.left_mul(&h), &h);
    DensityVector::from_masses(op.partition, &h, residual, iterations, converged)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGap {
    pub gap: f64,
    pub lambda2: f64,
    pub iterations: usize,
    pub converged: bool,
}

const GAP_WINDOW: usize = 32;
const GAP_SPAN: usize = 8;
const GAP_TOL: f64 = 1e-4;
const GAP_MAX_ITER: usize = 20_000;

/// `1 − |λ₂|` by power iteration on the zero-sum subspace (invariant under
/// `v ↦ vP` for row-stochastic `P`), projected along the stationary vector
/// to remove rounding drift.  `|λ₂|` is the geometric-mean growth rate over
/// the last `GAP_SPAN` windows, which also averages out the rotation of
/// complex or sign-alternating subdominant eigenvalues.
pub fn spectral_gap(op: &UlamOperator) -> SpectralGap {
    let n = op.len();
    let pi = stationary_density(op).masses();
    let mut rng = member_rng(0x6a9, 0);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let project = |v: &mut Vec<f64>| {
        let s: f64 = v.iter().sum();
        v.iter_mut().zip(&pi).for_each(|(x, p)| *x -= s * p);
    };
    let norm = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
    project(&mut v);
    let mut log_rates: Vec<f64> = Vec::new();
    let mut prev = f64::NAN;
    let mut iterations = 0;
    while iterations < GAP_MAX_ITER {
        let start = norm(&v);
        if !(start > 0.0) {
            return gap_result(0.0, iterations, true);
        }
        v.iter_mut().for_each(|x| *x /= start);
        for _ in 0..GAP_WINDOW {
            v = op.left_mul(&v);
            project(&mut v);
            iterations += 1;
        }
        let end = norm(&v);
        if !(end > 1e-300) {
            return gap_result(0.0, iterations, true);
        }
        log_rates.push(end.ln() / GAP_WINDOW as f64);
        if log_rates.len() >= GAP_SPAN {
            let tail = &log_rates[log_rates.len() - GAP_SPAN..];
            let rate = (tail.iter().sum::<f64>() / GAP_SPAN as f64).exp();
            if (rate - prev).abs() < GAP_TOL * rate.max(1e-3) {
                return gap_result(rate, iterations, true);
            }
            prev = rate;
        }
    }
    gap_result(prev, iterations, false)
}

fn gap_result(lambda2: f64, iterations: usize, converged: bool) -> SpectralGap {
    let lambda2 = lambda2.min(1.0);
    SpectralGap {
        gap: 1.0 - lambda2,
        lambda2,
        iterations,
        converged,
    }
}

/// Cell-averaged Parry density of `θ ↦ βθ mod 1`:
/// `h(x) ∝ Σ_{n ≥ 0, x < Tⁿ1} β^{−n}`.
pub fn parry_density(beta: f64, n: usize) -> Result<DensityVector> {
    if !(beta > 1.0) {
        return Err(Error::param("beta", format!("{beta} must be > 1")));
    }
    if n == 0 {
        return Err(Error::param("cells", "need at least one cell"));
    }
    let orbit = parry_orbit(beta);
    let axis = Axis::new(0.0, 1.0, n);
    let masses: Vec<f64> = (0..n)
        .map(|i| {
            let (l, r) = (axis.left(i), axis.right(i));
            orbit.iter().map(|&(w, t)| w * (t.min(r) - l).max(0.0)).sum()
        })
        .collect();
    Ok(DensityVector::from_masses(Partition::Base(axis), &masses, 0.0, 0, true))
}

/// `(β^{−n}, Tⁿ1)` for every term of the Parry series above the cutoff.
pub fn parry_orbit(beta: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut t = 1.0;
    let mut w = 1.0;
    while w >= PARRY_CUTOFF {
        out.push((w, t));
        let y = beta * t;
        let nearest = y.round();
        if (y - nearest).abs() < PARRY_SNAP {
            break; // Tⁿ⁺¹1 = 0: every later term vanishes
        }
        t = y - y.floor();
        w /= beta;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOLDEN: f64 = 1.618_033_988_749_895;

    #[test]
    fn doubling_two_cells() {
        let op = build_ulam_base(BaseSelector::Beta { beta: 2.0 }, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((op.entry(i, j) - 0.5).abs() < 1e-15);
            }
        }
        let g = spectral_gap(&op);
        assert!((g.gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_density_is_uniform() {
        let op = build_ulam_base(BaseSelector::Beta { beta: 2.0 }, 256).unwrap();
        let h = stationary_density(&op);
        assert!(h.converged);
        assert!(h.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_operator() {
        let op = UlamOperator::identity(Partition::Base(Axis::new(0.0, 1.0, 16)));
        let h = stationary_density(&op);
        assert_eq!(h.l1_residual, 0.0);
        assert!(h.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(spectral_gap(&op).gap.abs() < 1e-9);
    }

    #[test]
    fn golden_mean_parry_plateaus() {
        let h = parry_density(GOLDEN, 1000).unwrap();
        // cell 0 lies in [0, 1/β); the last one in [1/β, 1)
        assert!((h.values[0] - 1.1708).abs() < 1e-4);
        assert!((h.values[999] - 0.7236).abs() < 1e-4);
        assert!((h.values[0] / h.values[999] - (1.0 + 1.0 / GOLDEN)).abs() < 1e-12);
    }

    #[test]
    fn integer_beta_parry_is_uniform() {
        for beta in [2.0, 3.0] {
            let h = parry_density(beta, 64).unwrap();
            assert!(h.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn ulam_matches_parry() {
        let op = build_ulam_base(BaseSelector::Beta { beta: GOLDEN }, 1024).unwrap();
        assert!(op.row_sum_error() < 1e-12);
        let h = stationary_density(&op);
        let p = parry_density(GOLDEN, 1024).unwrap();
        assert!(h.l1_distance(&p) < 1e-2, "{}", h.l1_distance(&p));
        assert!(h.values.iter().cloned().fold(f64::INFINITY, f64::min) > 0.0);
    }

    #[test]
    fn quadratic_base_rows_are_stochastic() {
        let b = crate::maps::DEFAULT_MISIUREWICZ_A;
        let op = build_ulam_base(BaseSelector::Quadratic { b, k: 2 }, 512).unwrap();
        assert!(op.row_sum_error() < 1e-12);
        let h = stationary_density(&op);
        assert!((h.total_mass() - 1.0).abs() < 1e-10);
        assert!(h.l1_residual < 1e-10, "{}", h.l1_residual);
    }

    #[test]
    fn band_merging_base_has_no_gap() {
        // Q_b swaps the two bands meeting at its positive fixed point, so
        // Q_b² has two invariant intervals
        let b = crate::maps::DEFAULT_MISIUREWICZ_A;
        let op = build_ulam_base(BaseSelector::Quadratic { b, k: 2 }, 1024).unwrap();
        assert!(spectral_gap(&op).gap < 0.05);
    }

    #[test]
    fn golden_mean_gap_is_stable() {
        let g1 = spectral_gap(&build_ulam_base(BaseSelector::Beta { beta: GOLDEN }, 1024).unwrap());
        let g2 = spectral_gap(&build_ulam_base(BaseSelector::Beta { beta: GOLDEN }, 2048).unwrap());
        assert!(g1.converged && g2.converged);
        assert!(g1.gap > 0.2);
        assert!((g1.gap - g2.gap).abs() < 0.1 * g1.gap);
    }

    #[test]
    fn locate_ties_go_right() {
        let a = Axis::new(0.0, 1.0, 4);
        assert_eq!(a.locate(0.25), Some(1));
        assert_eq!(a.locate(1.0), Some(3));
        assert_eq!(a.locate(0.0), Some(0));
        assert_eq!(a.locate(1.5), None);
    }
}
