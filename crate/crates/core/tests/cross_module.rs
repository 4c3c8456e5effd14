use viana_core::attractor::attractor_grid;
use viana_core::maps::{make_f1, make_f2_default, DEFAULT_MISIUREWICZ_A};
use viana_core::ulam::{build_ulam_2d, stationary_density};
use viana_core::SkewProductSpec;

const A: f64 = DEFAULT_MISIUREWICZ_A;

/// Fraction of the Ulam fixed point's mass sitting on occupied attractor cells.
fn mass_on_attractor(spec: &SkewProductSpec, n: usize) -> f64 {
    let op = build_ulam_2d(spec, n, n, 8, 5).unwrap();
    let h = stationary_density(&op);
    assert!(h.converged);
    let grid = attractor_grid(spec, (n, n), 40 * n * n, 6).unwrap();
    let masses = h.masses();
    let total: f64 = masses.iter().sum();
    let on: f64 = masses.iter().zip(&grid.occupied).filter(|(_, &o)| o).map(|(m, _)| m).sum();
    on / total
}

#[test]
fn ulam_mass_lives_on_the_attractor_grid() {
    let f1 = make_f1(A, 0.01, 2.0).unwrap();
    let f2 = make_f2_default(A, 2, A, 0.005).unwrap();
    for (name, spec) in [("F1", f1), ("F2", f2)] {
        let overlap = mass_on_attractor(&spec, 64);
        assert!(overlap >= 0.99, "{name}: {overlap}");
    }
}
