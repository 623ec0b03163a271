//! Unconstrained maximization by sampling: the best of `t` uniformly random subsets,
//! evaluated in a single adaptive round.

use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::{Oracle, Subset};

#[derive(Clone, Debug, PartialEq)]
pub struct UnconstrainedParams {
    pub eps: f64,
    pub delta: f64,
    /// Known `f(∅)`; when set, the empty set competes with the random draws at no query cost.
    pub empty_value: Option<f64>,
}

impl UnconstrainedParams {
    pub fn new(eps: f64, delta: f64) -> Self {
        UnconstrainedParams {
            eps,
            delta,
            empty_value: None,
        }
    }

    /// Number of random subsets `t = ⌈ln(1/δ) / ln(1 + 4ε/3)⌉`.
    pub fn iterations(&self) -> usize {
        let t = ((1.0 / self.delta).ln() / (1.0 + 4.0 * self.eps / 3.0).ln()).ceil();
        (t as usize).max(1)
    }

    fn validate(&self) -> Result<()> {
        if !self.eps.is_finite() || self.eps <= 0.0 {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.eps > 0.25 {
            log::warn!(
                "eps = {} exceeds 1/4; the query bound for random-subset maximization assumes eps <= 1/4",
                self.eps
            );
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct UnconstrainedOutcome {
    pub set: Subset,
    pub value: f64,
}

/// Returns the best of `params.iterations()` subsets of `ground`, each containing every
/// element independently with probability 1/2. Ties go to the earliest draw.
pub fn unconstrained_max<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_>,
    ground: &Subset,
    params: &UnconstrainedParams,
    rng: &mut R,
) -> Result<UnconstrainedOutcome> {
    params.validate()?;
    if ground.is_empty() {
        return Err(Error::Precondition("unconstrained maximization needs a nonempty ground set".into()));
    }
    let draws: Vec<Subset> = (0..params.iterations())
        .map(|_| ground.iter().filter(|_| rng.gen_bool(0.5)).collect())
        .collect();
    let values = oracle.evaluate_batch(&draws)?;
    let (mut best, mut best_value) = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    let mut set = draws.into_iter().nth(best).expect("best index is in range");
    if let Some(empty) = params.empty_value.filter(|&e| e > best_value) {
        set = Subset::empty();
        best_value = empty;
    }
    oracle.note_value(best_value);
    Ok(UnconstrainedOutcome {
        set,
        value: best_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Modular;
    use crate::oracle::seeded_rng;

    #[test]
    fn iteration_bound() {
        assert_eq!(UnconstrainedParams::new(0.25, 0.05).iterations(), 11);
        assert_eq!(UnconstrainedParams::new(0.2, 0.1).iterations(), 10);
    }

    #[test]
    fn singleton_ground_set() {
        let f = Modular::new(vec![1.0]);
        for seed in 0..20 {
            let mut oracle = Oracle::new(&f);
            let out = unconstrained_max(&mut oracle, &Subset::full(1), &UnconstrainedParams::new(0.25, 0.05), &mut seeded_rng(seed)).unwrap();
            // 11 fair coin flips all coming up tails has probability 2^-11.
            assert_eq!(out.set.to_indices(), vec![0]);
            assert_eq!(out.value, 1.0);
        }
    }

    #[test]
    fn one_round_t_queries_and_subset_of_ground() {
        let f = Modular::new(vec![1.0; 10]);
        let ground = Subset::from_indices([1, 3, 5, 7]);
        let params = UnconstrainedParams::new(0.25, 0.05);
        let mut oracle = Oracle::new(&f);
        let out = unconstrained_max(&mut oracle, &ground, &params, &mut seeded_rng(2)).unwrap();
        assert!(out.set.is_subset_of(&ground));
        assert_eq!(oracle.ledger().rounds(), 1);
        assert_eq!(oracle.ledger().total_queries(), params.iterations() as u64);
    }

    #[test]
    fn empty_candidate_wins_for_negative_functions() {
        let f = Modular::new(vec![-1.0; 4]);
        let mut params = UnconstrainedParams::new(0.25, 0.05);
        params.empty_value = Some(0.0);
        let mut oracle = Oracle::new(&f);
        let out = unconstrained_max(&mut oracle, &Subset::full(4), &params, &mut seeded_rng(0)).unwrap();
        assert!(out.set.is_empty());
        assert_eq!(oracle.ledger().total_queries(), params.iterations() as u64);
    }

    #[test]
    fn empty_ground_is_rejected() {
        let f = Modular::new(vec![1.0]);
        let mut oracle = Oracle::new(&f);
        assert!(unconstrained_max(&mut oracle, &Subset::empty(), &UnconstrainedParams::new(0.25, 0.05), &mut seeded_rng(0)).is_err());
    }
}
