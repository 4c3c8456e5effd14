//! Simulation and estimation laboratory for two Viana-type skew products
//!
//! * `F1(θ, x) = (βθ mod 1, a − x² + α sin 2πθ)` on `S¹ × J`
//! * `F2(θ, x) = (Q_b^k(θ), a − x² + α s(θ))` on `I × J`, `I = [Q_b²(0), Q_b(0)]`
//!
//! The crate computes expansion and recurrence times, return depths,
//! transfer-operator discretizations, correlation / large-deviation / CLT
//! estimators and attractor coverage.  Every ensemble computation is a
//! deterministic function of `(seed, member index)` and reduces in a fixed
//! pairwise order, so results do not depend on the rayon thread count.

pub mod attractor;
pub mod ensemble;
pub mod error;
pub mod maps;
pub mod orbit;
pub mod stats;
pub mod ulam;

pub use error::{Error, Result};
pub use maps::{MapKind, PhasePoint, SkewProductSpec};
pub use orbit::Orbit;
