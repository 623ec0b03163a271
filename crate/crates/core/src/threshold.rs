//! Threshold sampling: grow a solution by uniformly random blocks of candidates whose
//! marginal gains clear a threshold `τ`, filtering the candidate pool every round.
//!
//! Each outer round costs one filter batch (`f(S)` plus `f(S ∪ {x})` for every candidate)
//! and one batch per block-size estimate. An estimate for block size `t` draws `ℓ`
//! independent indicator samples: a uniformly random `T` of size `t − 1` and a uniformly
//! random `x ∉ T` from the pool, scoring `1[f(S ∪ T ∪ {x}) − f(S ∪ T) ≥ τ]`. Each sample
//! costs two evaluations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::oracle::{ElementId, Oracle, QueryLedger, Subset};

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdParams {
    pub k: usize,
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    /// Stop as soon as a filtered pool has fewer than this many candidates.
    pub break_size: Option<usize>,
    /// Fixed number of indicator samples per estimate, replacing the theoretical `ℓ`.
    pub sample_override: Option<usize>,
    /// Record per-round snapshots in the outcome.
    pub debug_trace: bool,
}

/// Constants derived from the parameters and the ground-set size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdConstants {
    /// `ε̂ = ε/3`
    pub eps_hat: f64,
    /// Outer rounds `r = ⌈log_{1/(1−ε̂)}(2n/δ)⌉`.
    pub rounds: usize,
    /// Largest scan index `m = ⌈ln(k)/ε̂⌉`.
    pub scan_steps: usize,
    /// `δ̂ = δ / (2r(m+1))`
    pub delta_hat: f64,
    /// Theoretical samples per estimate `ℓ = 16⌈ln(2/δ̂)/ε̂²⌉`.
    pub samples: usize,
}

impl ThresholdParams {
    pub fn new(k: usize, tau: f64, eps: f64, delta: f64) -> Self {
        ThresholdParams {
            k,
            tau,
            eps,
            delta,
            break_size: None,
            sample_override: None,
            debug_trace: false,
        }
    }

    pub fn with_break_size(mut self, size: usize) -> Self {
        self.break_size = Some(size);
        self
    }

    pub fn with_sample_override(mut self, samples: Option<usize>) -> Self {
        self.sample_override = samples;
        self
    }

    pub fn with_debug_trace(mut self, on: bool) -> Self {
        self.debug_trace = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !self.tau.is_finite() || self.tau < 0.0 {
            return bad(format!("threshold must be finite and nonnegative, got {}", self.tau));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.sample_override == Some(0) {
            return bad("sample override must be positive".into());
        }
        Ok(())
    }

    pub fn constants(&self, n: usize) -> ThresholdConstants {
        let eps_hat = self.eps / 3.0;
        let rounds = ((2.0 * n.max(1) as f64 / self.delta).ln() / -(1.0 - eps_hat).ln()).ceil() as usize;
        let scan_steps = ((self.k as f64).ln() / eps_hat).ceil() as usize;
        let delta_hat = self.delta / (2.0 * rounds as f64 * (scan_steps + 1) as f64);
        let samples = 16 * ((2.0 / delta_hat).ln() / (eps_hat * eps_hat)).ceil() as usize;
        ThresholdConstants {
            eps_hat,
            rounds,
            scan_steps,
            delta_hat,
            samples,
        }
    }

    pub fn samples_per_estimate(&self, n: usize) -> usize {
        self.sample_override.unwrap_or_else(|| self.constants(n).samples)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakReason {
    ExhaustedRounds,
    EmptyA,
    FullS,
    SmallA,
}

/// State of one outer round, recorded when `debug_trace` is set.
#[derive(Clone, Debug, Serialize)]
pub struct RoundSnapshot {
    pub round: usize,
    /// `|A|` right after filtering.
    pub candidates: usize,
    /// `|S|` at the start of the round.
    pub solution_size: usize,
    pub t: Option<usize>,
    pub mu: Option<f64>,
    #[serde(skip)]
    pub candidate_set: Vec<usize>,
    #[serde(skip)]
    pub solution_set: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct SamplingOutcome {
    pub solution: Subset,
    /// Surviving candidates, disjoint from `solution`.
    pub candidates: Subset,
    pub break_reason: BreakReason,
    /// `f(solution)` when the last round evaluated it.
    pub value: Option<f64>,
    pub ledger: QueryLedger,
    pub snapshots: Vec<RoundSnapshot>,
}

/// Draws one indicator query pair `(S ∪ T ∪ {x}, S ∪ T)` with `|T| = t − 1`.
fn draw_indicator_pair<R: Rng + ?Sized>(
    base: &Subset,
    pool: &mut [ElementId],
    t: usize,
    rng: &mut R,
) -> (Subset, Subset) {
    let (chosen, _) = pool.partial_shuffle(rng, t);
    let x = chosen[t - 1];
    let with_block = Subset::from_elements(base.iter().chain(chosen[..t - 1].iter().copied()));
    (with_block.with(x), with_block)
}

/// Mean of `ell` indicator samples for block size `t`, drawn in one adaptive round.
pub fn estimate_mean<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_>,
    solution: &Subset,
    candidates: &[ElementId],
    t: usize,
    tau: f64,
    ell: usize,
    rng: &mut R,
) -> Result<f64> {
    if t == 0 || t > candidates.len() {
        return Err(Error::Precondition(format!(
            "block size {t} must lie in 1..={}",
            candidates.len()
        )));
    }
    if ell == 0 {
        return Err(Error::Precondition("at least one sample is required".into()));
    }
    let mut pool = candidates.to_vec();
    let mut queries = Vec::with_capacity(2 * ell);
    for _ in 0..ell {
        let (extended, block) = draw_indicator_pair(solution, &mut pool, t, rng);
        queries.push(extended);
        queries.push(block);
    }
    let values = oracle.evaluate_batch(&queries)?;
    oracle.count_indicator_samples(ell as u64);
    let hits = values.chunks_exact(2).filter(|p| p[0] - p[1] >= tau).count();
    Ok(hits as f64 / ell as f64)
}

/// A single indicator sample (one round, two evaluations).
pub fn sample_indicator<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_>,
    solution: &Subset,
    candidates: &[ElementId],
    t: usize,
    tau: f64,
    rng: &mut R,
) -> Result<bool> {
    estimate_mean(oracle, solution, candidates, t, tau, 1, rng).map(|mu| mu == 1.0)
}

/// Runs threshold sampling over the whole ground set of `oracle`.
pub fn threshold_sampling<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_>,
    params: &ThresholdParams,
    rng: &mut R,
) -> Result<SamplingOutcome> {
    params.validate()?;
    let n = oracle.ground_size();
    let consts = params.constants(n);
    let ell = params.samples_per_estimate(n);
    let stop_level = 1.0 - 1.5 * consts.eps_hat;
    let k = params.k;
    let tau = params.tau;

    let mut local = oracle.fork();
    let mut solution = Subset::empty();
    let mut pool: Vec<ElementId> = (0..n).map(ElementId).collect();
    let mut value = None;
    let mut reason = BreakReason::ExhaustedRounds;
    let mut snapshots = Vec::new();

    for round in 0..consts.rounds {
        let ext = local.batch_extensions(&solution, &pool)?;
        local.note_value(ext.base_value);
        value = Some(ext.base_value);
        pool = pool
            .iter()
            .zip(ext.marginals())
            .filter(|&(_, gain)| gain >= tau)
            .map(|(&x, _)| x)
            .collect();
        if params.debug_trace {
            snapshots.push(RoundSnapshot {
                round,
                candidates: pool.len(),
                solution_size: solution.len(),
                t: None,
                mu: None,
                candidate_set: pool.iter().map(|x| x.index()).collect(),
                solution_set: solution.to_indices(),
            });
        }
        if pool.is_empty() {
            reason = BreakReason::EmptyA;
            break;
        }
        if params.break_size.is_some_and(|b| pool.len() < b) {
            reason = BreakReason::SmallA;
            break;
        }

        let room = k - solution.len();
        let mut t = 1;
        let mut last_mu = None;
        let mut previous = None;
        for i in 0..=consts.scan_steps {
            let grown = (1.0 + consts.eps_hat).powi(i as i32).floor() as usize;
            let candidate_t = grown.clamp(1, pool.len());
            // Consecutive steps often repeat a block size; its estimate already passed.
            if previous == Some(candidate_t) {
                continue;
            }
            previous = Some(candidate_t);
            t = candidate_t;
            // From here on the block is capped at the remaining room whatever happens.
            if t >= room {
                break;
            }
            let mu = estimate_mean(&mut local, &solution, &pool, t, tau, ell, rng)?;
            last_mu = Some(mu);
            if mu <= stop_level {
                break;
            }
        }
        if let Some(snap) = snapshots.last_mut() {
            snap.t = Some(t);
            snap.mu = last_mu;
        }

        let block_size = t.min(room);
        let (block, rest) = pool.partial_shuffle(rng, block_size);
        for &x in block.iter() {
            solution.insert(x);
        }
        let mut rest = rest.to_vec();
        rest.sort_unstable();
        pool = rest;
        value = None;
        if solution.len() == k {
            reason = BreakReason::FullS;
            break;
        }
    }

    oracle.absorb_sequential(local.ledger());
    Ok(SamplingOutcome {
        solution,
        candidates: Subset::from_elements(pool),
        break_reason: reason,
        value,
        ledger: local.into_ledger(),
        snapshots,
    })
}

/// Checks that every element of the ground set has marginal below `tau` with respect to the
/// outcome's solution. Issues one batch on `oracle`.
pub fn verify_termination_marginals(
    oracle: &mut Oracle<'_>,
    outcome: &SamplingOutcome,
    tau: f64,
) -> Result<bool> {
    let all: Vec<ElementId> = (0..oracle.ground_size()).map(ElementId).collect();
    let ext = oracle.batch_extensions(&outcome.solution, &all)?;
    let clear = ext.marginals().all(|gain| gain < tau);
    Ok(clear)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{FnObjective, GraphCut, Modular, WeightedGraph};
    use crate::oracle::seeded_rng;

    fn ids(n: usize) -> Vec<ElementId> {
        (0..n).map(ElementId).collect()
    }

    #[test]
    fn constants_follow_the_formulas() {
        let p = ThresholdParams::new(10, 1.0, 0.25, 0.05);
        let c = p.constants(50);
        let eps_hat = 0.25 / 3.0;
        assert_eq!(c.eps_hat, eps_hat);
        assert_eq!(c.rounds, ((2000.0f64).ln() / -(1.0 - eps_hat).ln()).ceil() as usize);
        assert_eq!(c.rounds, 88);
        assert_eq!(c.scan_steps, 28);
        assert!((c.delta_hat - 0.05 / (2.0 * 88.0 * 29.0)).abs() < 1e-18);
        assert_eq!(c.samples, 16 * ((2.0 / c.delta_hat).ln() / (eps_hat * eps_hat)).ceil() as usize);
        assert_eq!(ThresholdParams::new(1, 1.0, 0.25, 0.05).constants(5).scan_steps, 0);
    }

    #[test]
    fn singleton_pool_indicator() {
        let f = Modular::new(vec![2.0]);
        let mut oracle = Oracle::new(&f);
        let mut rng = seeded_rng(1);
        let hit = sample_indicator(&mut oracle, &Subset::empty(), &ids(1), 1, 1.0, &mut rng).unwrap();
        assert!(hit);
        assert_eq!(oracle.ledger().total_queries(), 2);
        assert_eq!(oracle.ledger().indicator_samples(), 1);
    }

    #[test]
    fn indicator_precondition() {
        let f = Modular::new(vec![1.0, 1.0]);
        let mut oracle = Oracle::new(&f);
        let mut rng = seeded_rng(1);
        assert!(estimate_mean(&mut oracle, &Subset::empty(), &ids(2), 3, 0.5, 4, &mut rng).is_err());
        assert!(estimate_mean(&mut oracle, &Subset::empty(), &ids(2), 0, 0.5, 4, &mut rng).is_err());
    }

    #[test]
    fn estimate_extremes() {
        let f = Modular::new(vec![1.0, 2.0, 3.0, 4.0]);
        let mut oracle = Oracle::new(&f);
        let mut rng = seeded_rng(5);
        let mu = estimate_mean(&mut oracle, &Subset::empty(), &ids(4), 3, 1.0, 50, &mut rng).unwrap();
        assert_eq!(mu, 1.0);
        let mu = estimate_mean(&mut oracle, &Subset::empty(), &ids(4), 2, 4.5, 50, &mut rng).unwrap();
        assert_eq!(mu, 0.0);
        assert_eq!(oracle.ledger().rounds(), 2);
        assert_eq!(oracle.ledger().total_queries(), 200);
    }

    /// Exact `E[I_t]` by enumerating every ordered choice of `(T, x)`.
    fn exhaustive_indicator_mean(f: &dyn crate::oracle::Objective, pool: &[usize], t: usize, tau: f64) -> f64 {
        let m = pool.len();
        let mut hits = 0usize;
        let mut total = 0usize;
        for mask in 0u32..(1 << m) {
            if mask.count_ones() as usize != t - 1 {
                continue;
            }
            let block: Vec<usize> = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| pool[b]).collect();
            for b in (0..m).filter(|b| mask >> b & 1 == 0) {
                let base = Subset::from_indices(block.iter().copied());
                let gain = f.value(&base.with(ElementId(pool[b]))) - f.value(&base);
                total += 1;
                hits += usize::from(gain >= tau);
            }
        }
        hits as f64 / total as f64
    }

    fn path_cut() -> GraphCut {
        GraphCut::new(WeightedGraph::new(3, vec![(0, 1, 1.0), (1, 2, 1.0)]).unwrap())
    }

    #[test]
    fn path_cut_indicator_matches_enumeration() {
        let f = path_cut();
        let exact = exhaustive_indicator_mean(&f, &[0, 1, 2], 2, 2.0);
        let mut oracle = Oracle::new(&f);
        let mut rng = seeded_rng(42);
        let mu = estimate_mean(&mut oracle, &Subset::empty(), &ids(3), 2, 2.0, 100_000, &mut rng).unwrap();
        assert!((mu - exact).abs() < 0.01, "mu {mu} exact {exact}");

        let exact1 = exhaustive_indicator_mean(&f, &[0, 1, 2], 2, 1.0);
        let mu = estimate_mean(&mut oracle, &Subset::empty(), &ids(3), 2, 1.0, 100_000, &mut rng).unwrap();
        assert!((mu - exact1).abs() < 0.01, "mu {mu} exact {exact1}");
    }

    #[test]
    fn hundred_sample_estimate_within_hoeffding_band() {
        let f = path_cut();
        let exact = exhaustive_indicator_mean(&f, &[0, 1, 2], 2, 1.0);
        // Hoeffding: P(|μ̄ − μ| ≥ 0.15) ≤ 2 exp(−2·100·0.0225) ≈ 0.022 per estimate.
        let mut far = 0;
        for seed in 0..200 {
            let mut oracle = Oracle::new(&f);
            let mut rng = seeded_rng(seed);
            let mu = estimate_mean(&mut oracle, &Subset::empty(), &ids(3), 2, 1.0, 100, &mut rng).unwrap();
            far += usize::from((mu - exact).abs() > 0.15);
        }
        assert!(far <= 12, "{far} of 200 estimates off by more than 0.15");
    }

    #[test]
    fn high_threshold_empties_the_pool() {
        let f = Modular::new(vec![1.0, 2.0, 3.0]);
        let mut oracle = Oracle::new(&f);
        let params = ThresholdParams::new(2, 3.5, 0.25, 0.05);
        let out = threshold_sampling(&mut oracle, &params, &mut seeded_rng(0)).unwrap();
        assert!(out.solution.is_empty());
        assert_eq!(out.break_reason, BreakReason::EmptyA);
        assert_eq!(out.ledger.rounds(), 1);
        assert_eq!(oracle.ledger().rounds(), 1);
        let mut check = Oracle::new(&f);
        assert!(verify_termination_marginals(&mut check, &out, 3.5).unwrap());
    }

    #[test]
    fn modular_saturation_fills_k() {
        let f = Modular::new(vec![1.0; 20]);
        let mut oracle = Oracle::new(&f);
        let params = ThresholdParams::new(5, 0.5, 0.25, 0.05).with_sample_override(Some(100));
        let out = threshold_sampling(&mut oracle, &params, &mut seeded_rng(3)).unwrap();
        assert_eq!(out.solution.len(), 5);
        assert_eq!(out.break_reason, BreakReason::FullS);
        assert!(out.solution.is_disjoint(&out.candidates));
    }

    #[test]
    fn break_variant_stops_on_small_pool() {
        // Five heavy elements clear τ, the rest do not: the first filter leaves |A| = 5 < 6.
        let mut w = vec![0.1; 15];
        w[..5].fill(1.0);
        let f = Modular::new(w);
        let mut oracle = Oracle::new(&f);
        let params = ThresholdParams::new(2, 0.5, 0.25, 0.05).with_break_size(6);
        let out = threshold_sampling(&mut oracle, &params, &mut seeded_rng(9)).unwrap();
        assert_eq!(out.break_reason, BreakReason::SmallA);
        assert!(out.candidates.len() < 6);
        assert_eq!(out.candidates.to_indices(), vec![0, 1, 2, 3, 4]);
        assert!(out.value.is_some());
    }

    #[test]
    fn zero_threshold_is_allowed() {
        let f = FnObjective::new(8, |s: &Subset| s.len() as f64);
        let mut oracle = Oracle::new(&f);
        let params = ThresholdParams::new(3, 0.0, 0.25, 0.05).with_sample_override(Some(10));
        let out = threshold_sampling(&mut oracle, &params, &mut seeded_rng(1)).unwrap();
        assert_eq!(out.solution.len(), 3);
    }

    #[test]
    fn invalid_params_rejected() {
        let f = Modular::new(vec![1.0]);
        let mut oracle = Oracle::new(&f);
        for p in [
            ThresholdParams::new(0, 1.0, 0.25, 0.05),
            ThresholdParams::new(1, -1.0, 0.25, 0.05),
            ThresholdParams::new(1, 1.0, 1.5, 0.05),
            ThresholdParams::new(1, 1.0, 0.25, 0.0),
        ] {
            assert!(threshold_sampling(&mut oracle, &p, &mut seeded_rng(0)).is_err());
        }
    }

    #[test]
    fn corrupted_outcome_is_detected() {
        let f = Modular::new(vec![1.0, 2.0, 3.0]);
        let mut oracle = Oracle::new(&f);
        let params = ThresholdParams::new(3, 0.5, 0.25, 0.05).with_sample_override(Some(20));
        let mut out = threshold_sampling(&mut oracle, &params, &mut seeded_rng(0)).unwrap();
        assert_eq!(out.solution.len(), 3);
        out.solution = Subset::from_indices([0, 1]);
        let mut check = Oracle::new(&f);
        assert!(!verify_termination_marginals(&mut check, &out, 0.5).unwrap());
    }
}
