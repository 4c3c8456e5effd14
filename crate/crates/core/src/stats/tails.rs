use super::fit::{fit_stretched_exp_points, StretchedExpFit};
use crate::ensemble::{map_members, member_rng};
use crate::error::{Error, Result};
use crate::maps::SkewProductSpec;
use crate::orbit::{Orbit, TimeParams, TimeProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailKind {
    Expansion,
    Recurrence,
    /// Horizontal part of the recurrence time, at threshold `ε/2`.
    RecurrenceH,
    /// Vertical part of the recurrence time, at threshold `ε/2`.
    RecurrenceV,
    /// `max(ℰ, ℛ)`.
    Joint,
    /// `max(ℰ, ℛ_v)`.
    ExpansionOrV,
}

impl TailKind {
    pub const ALL: [TailKind; 6] = [
        TailKind::Expansion,
        TailKind::Recurrence,
        TailKind::RecurrenceH,
        TailKind::RecurrenceV,
        TailKind::Joint,
        TailKind::ExpansionOrV,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TailKind::Expansion => "expansion",
            TailKind::Recurrence => "recurrence",
            TailKind::RecurrenceH => "recurrence_h",
            TailKind::RecurrenceV => "recurrence_v",
            TailKind::Joint => "joint",
            TailKind::ExpansionOrV => "expansion_or_v",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    fn exceeds(self, t: &TimeProfile, n: u64) -> bool {
        match self {
            TailKind::Expansion => t.expansion.exceeds(n),
            TailKind::Recurrence => t.recurrence.exceeds(n),
            TailKind::RecurrenceH => t.recurrence_h.exceeds(n),
            TailKind::RecurrenceV => t.recurrence_v.exceeds(n),
            TailKind::Joint => t.expansion.exceeds(n) || t.recurrence.exceeds(n),
            TailKind::ExpansionOrV => t.expansion.exceeds(n) || t.recurrence_v.exceeds(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailParams {
    pub c: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

/// `p_n = Leb{y : T(y) > n}` on a Lebesgue-uniform ensemble (no burn-in).
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve {
    pub kind: TailKind,
    pub n_values: Vec<u64>,
    pub p_values: Vec<f64>,
    pub counts: Vec<u64>,
    pub ensemble_size: usize,
    /// Members dropped after landing on the critical line.
    pub excluded: usize,
    pub params: TailParams,
}

impl TailCurve {
    pub fn at(&self, n: u64) -> Option<f64> {
        self.n_values.iter().position(|&m| m == n).map(|i| self.p_values[i])
    }

    /// Binomial standard error at index `i`.
    pub fn stderr(&self, i: usize) -> f64 {
        let p = self.p_values[i];
        (p * (1.0 - p) / self.ensemble_size as f64).sqrt()
    }
}

/// All six tail curves from one pass over a shared ensemble, so the
/// pointwise relations between them (`ℰ ≤ max(ℰ, ℛ)`, the union bound) hold
/// exactly.
pub fn tail_curves(
    spec: &SkewProductSpec,
    c: f64,
    epsilon: f64,
    delta: f64,
    n_list: &[u64],
    size: usize,
    seed: u64,
) -> Result<Vec<TailCurve>> {
    if size == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if n_list.is_empty() {
        return Err(Error::param("n_list", "empty list"));
    }
    let time = TimeParams { c, epsilon, delta };
    let horizon = *n_list.iter().max().expect("non-empty");
    let profiles = map_members(size, |i| {
        let mut orbit = Orbit::lebesgue(spec, member_rng(seed, i));
        orbit.time_profile(&time, horizon)
    });
    let mut kept = Vec::with_capacity(size);
    for p in profiles {
        match p {
            Ok(t) => kept.push(t),
            Err(Error::SingularHit { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let params = TailParams { c, epsilon, delta, seed };
    Ok(TailKind::ALL
        .into_iter()
        .map(|kind| {
            let counts: Vec<u64> = n_list
                .iter()
                .map(|&n| kept.iter().filter(|t| kind.exceeds(t, n)).count() as u64)
                .collect();
            TailCurve {
                kind,
                n_values: n_list.to_vec(),
                p_values: counts.iter().map(|&k| k as f64 / kept.len() as f64).collect(),
                counts,
                ensemble_size: kept.len(),
                excluded: size - kept.len(),
                params,
            }
        })
        .collect())
}

/// Stretched-exponential fit of a tail curve on the points with
/// `p ∈ (10⁻⁶, 0.9)` inside `window`.
pub fn fit_stretched_exp(curve: &TailCurve, window: Option<(u64, u64)>) -> Result<StretchedExpFit> {
    let ns: Vec<f64> = curve.n_values.iter().map(|&n| n as f64).collect();
    fit_stretched_exp_points(
        &ns,
        &curve.p_values,
        window.map(|(a, b)| (a as f64, b as f64)),
        curve.params.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{make_f1, DEFAULT_MISIUREWICZ_A};

    #[test]
    fn curves_are_monotone_and_ordered() {
        let s = make_f1(DEFAULT_MISIUREWICZ_A, 0.01, 2.0).unwrap();
        let ns: Vec<u64> = (0..=60).step_by(5).collect();
        let curves = tail_curves(&s, 0.2, 0.1, 0.005, &ns, 2_000, 11).unwrap();
        let get = |k: TailKind| curves.iter().find(|c| c.kind == k).unwrap();
        for c in &curves {
            assert!(c.p_values.windows(2).all(|w| w[0] >= w[1]), "{:?}", c.kind);
        }
        assert_eq!(get(TailKind::Expansion).p_values[0], 1.0);
        let (e, j) = (get(TailKind::Expansion), get(TailKind::Joint));
        let (h, ev) = (get(TailKind::RecurrenceH), get(TailKind::ExpansionOrV));
        for i in 0..ns.len() {
            assert!(e.p_values[i] <= j.p_values[i]);
            assert!(j.p_values[i] <= h.p_values[i] + ev.p_values[i]);
        }
    }
}
