use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{seeded_rng, ElementId, Objective, Subset};

/// Largest ground set [`brute_force_opt`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Exhaustive maximizer of `f` over subsets of size at most `k`.
///
/// Ties go to the lexicographically smallest sorted member list.
pub fn brute_force_opt(f: &dyn Objective, k: usize) -> Result<(Subset, f64)> {
    let ground: Vec<ElementId> = (0..f.ground_size()).map(ElementId).collect();
    brute_force_within(f, &ground, k)
}

/// Exhaustive maximizer of `f` over subsets of `ground` with at most `k` members.
pub fn brute_force_within(f: &dyn Objective, ground: &[ElementId], k: usize) -> Result<(Subset, f64)> {
    let m = ground.len();
    if m > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n: m,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut best: Option<(Subset, f64)> = None;
    for mask in 0u64..(1u64 << m) {
        if mask.count_ones() as usize > k {
            continue;
        }
        let set = Subset::from_mask(ground, mask);
        let value = f.value(&set);
        let better = match &best {
            None => true,
            Some((b, v)) => value > *v || (value == *v && set.members() < b.members()),
        };
        if better {
            best = Some((set, value));
        }
    }
    Ok(best.expect("the empty set is always feasible"))
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SubmodularityReport {
    pub trials: usize,
    pub violations: usize,
    /// Largest observed `Δ(x,T) − Δ(x,S)` over sampled `S ⊆ T`, `x ∉ T`.
    pub max_violation: f64,
    pub negative_values: usize,
    pub min_value: f64,
}

impl SubmodularityReport {
    pub fn is_clean(&self) -> bool {
        self.violations == 0 && self.negative_values == 0
    }
}

/// Samples `trials` triples `S ⊆ T ⊆ N`, `x ∉ T` and checks diminishing returns and
/// nonnegativity, with a tolerance of `1e-9` times the magnitude of the values involved.
pub fn check_submodularity(f: &dyn Objective, trials: usize, seed: u64) -> SubmodularityReport {
    let n = f.ground_size();
    let mut rng = seeded_rng(seed);
    let mut report = SubmodularityReport {
        trials,
        max_violation: f64::NEG_INFINITY,
        min_value: f64::INFINITY,
        ..Default::default()
    };
    if n == 0 {
        return report;
    }
    for _ in 0..trials {
        let x = rng.gen_range(0..n);
        let outer_p: f64 = rng.gen();
        let inner_p: f64 = rng.gen();
        let mut t = Vec::new();
        let mut s = Vec::new();
        for e in (0..n).filter(|&e| e != x) {
            if rng.gen_bool(outer_p) {
                t.push(e);
                if rng.gen_bool(inner_p) {
                    s.push(e);
                }
            }
        }
        let s = Subset::from_indices(s);
        let t = Subset::from_indices(t);
        let values = [
            f.value(&s),
            f.value(&s.with(ElementId(x))),
            f.value(&t),
            f.value(&t.with(ElementId(x))),
        ];
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-9 * scale;
        let gap = (values[3] - values[2]) - (values[1] - values[0]);
        report.max_violation = report.max_violation.max(gap);
        if gap > tol {
            report.violations += 1;
        }
        for v in values {
            report.min_value = report.min_value.min(v);
            if v < -tol {
                report.negative_values += 1;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{FnObjective, Modular, RevenueMaximization, WeightedGraph};

    #[test]
    fn brute_force_modular_top_k() {
        let f = Modular::new(vec![1.0, 2.0, 3.0]);
        let (set, value) = brute_force_opt(&f, 2).unwrap();
        assert_eq!(set.to_indices(), vec![1, 2]);
        assert_eq!(value, 5.0);
    }

    #[test]
    fn brute_force_breaks_ties_lexicographically() {
        let g = WeightedGraph::new(2, vec![(0, 1, 1.0)]).unwrap();
        let f = RevenueMaximization::new(g);
        let (set, value) = brute_force_opt(&f, 2).unwrap();
        assert_eq!(set.to_indices(), vec![0]);
        assert_eq!(value, 1.0);
    }

    #[test]
    fn brute_force_k_zero_is_empty() {
        let f = Modular::new(vec![1.0, 2.0, 3.0]);
        let (set, value) = brute_force_opt(&f, 0).unwrap();
        assert!(set.is_empty());
        assert_eq!(value, 0.0);
    }

    #[test]
    fn brute_force_guard() {
        let f = Modular::new(vec![1.0; 25]);
        assert!(matches!(
            brute_force_opt(&f, 3),
            Err(Error::TooLarge { n: 25, .. })
        ));
    }

    #[test]
    fn checker_accepts_modular_and_rejects_supermodular() {
        let f = Modular::new((0..12).map(f64::from).collect());
        let report = check_submodularity(&f, 2000, 1);
        assert!(report.is_clean(), "{report:?}");
        assert!(report.max_violation.abs() < 1e-9);

        let square = FnObjective::new(12, |s: &Subset| (s.len() * s.len()) as f64);
        let report = check_submodularity(&square, 2000, 1);
        assert!(report.violations > 0);
    }
}
