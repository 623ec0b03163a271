//! Adaptive non-monotone maximization under a cardinality constraint.
//!
//! The algorithm guesses the threshold on a geometric grid `τᵢ = c₁(1+ε̂)ⁱ Δ*/k` and runs
//! every guess independently. Each guess runs threshold sampling that stops once the
//! candidate pool drops below `⌈c₃k⌉`; in that case the leftover pool is handed to
//! random-subset unconstrained maximization, downsampled to `k` elements, and trimmed to
//! its best prefix under a random order. The best set seen anywhere is returned.
//!
//! Guesses are logically parallel: the reported adaptivity is one round for `Δ*` plus the
//! largest number of rounds used by any single guess.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::{stream_rng, ElementId, Execution, Oracle, QueryLedger, Subset};
use crate::threshold::{threshold_sampling, BreakReason, SamplingOutcome, ThresholdParams};
use crate::unconstrained::{unconstrained_max, UnconstrainedParams};

#[derive(Clone, Debug, PartialEq)]
pub struct NonmonotoneParams {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub c1: f64,
    pub c3: f64,
    /// Fixed number of indicator samples per estimate inside threshold sampling.
    pub sample_override: Option<usize>,
    /// Let the empty set compete in unconstrained maximization.
    pub empty_candidate: bool,
    pub debug_trace: bool,
}

/// Constants derived from [`NonmonotoneParams`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonmonotoneConstants {
    /// `ε̂ = ε/6`
    pub eps_hat: f64,
    /// Largest grid index `r = ⌈2 ln(k)/ε̂⌉`; the grid has `r + 1` thresholds.
    pub grid_max: usize,
    /// `δ̂ = δ / (2(r+1))`
    pub delta_hat: f64,
    /// `⌈c₃k⌉`
    pub break_size: usize,
}

impl NonmonotoneParams {
    pub const C1: f64 = 1.0 / 7.0;
    pub const C3: f64 = 3.0;

    pub fn new(k: usize, eps: f64, delta: f64) -> Self {
        NonmonotoneParams {
            k,
            eps,
            delta,
            c1: Self::C1,
            c3: Self::C3,
            sample_override: None,
            empty_candidate: false,
            debug_trace: false,
        }
    }

    pub fn with_sample_override(mut self, samples: Option<usize>) -> Self {
        self.sample_override = samples;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return bad(format!("c1 must lie in (0, 1), got {}", self.c1));
        }
        if !self.c3.is_finite() || self.c3 <= 1.0 {
            return bad(format!("c3 must exceed 1, got {}", self.c3));
        }
        Ok(())
    }

    pub fn constants(&self) -> NonmonotoneConstants {
        let eps_hat = self.eps / 6.0;
        let grid_max = (2.0 * (self.k as f64).ln() / eps_hat).ceil() as usize;
        NonmonotoneConstants {
            eps_hat,
            grid_max,
            delta_hat: self.delta / (2.0 * (grid_max + 1) as f64),
            break_size: (self.c3 * self.k as f64).ceil() as usize,
        }
    }

    /// Threshold of grid index `i` given `Δ*`.
    pub fn threshold(&self, i: usize, max_singleton: f64) -> f64 {
        let eps_hat = self.constants().eps_hat;
        self.c1 * (1.0 + eps_hat).powi(i as i32) * max_singleton / self.k as f64
    }
}

/// Everything one threshold guess produced.
#[derive(Clone, Debug)]
pub struct ThresholdTrial {
    pub index: usize,
    pub tau: f64,
    pub outcome: SamplingOutcome,
    /// `f(outcome.solution)`.
    pub solution_value: f64,
    /// Unconstrained maximizer over the leftover pool (small-pool exits only).
    pub unconstrained: Option<Subset>,
    /// Unconstrained set downsampled to at most `k` elements.
    pub downsampled: Option<Subset>,
    /// Best prefix of a random order of the downsampled set.
    pub prefix: Option<Subset>,
    pub prefix_value: Option<f64>,
    pub best_local: Subset,
    pub best_local_value: f64,
}

#[derive(Clone, Debug)]
pub struct NonmonotoneOutcome {
    pub solution: Subset,
    pub value: f64,
    pub max_singleton: f64,
    pub ledger: QueryLedger,
    pub trials: Vec<ThresholdTrial>,
}

/// `Δ* = max_x f({x})`, one round of `n` queries.
pub fn max_singleton(oracle: &mut Oracle<'_>) -> Result<f64> {
    let singletons: Vec<Subset> = (0..oracle.ground_size())
        .map(|i| Subset::from_indices([i]))
        .collect();
    let values = oracle.evaluate_batch(&singletons)?;
    Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// A uniformly random `k`-subset of `set`, or `set` itself when it has at most `k` elements.
pub fn downsample<R: Rng + ?Sized>(set: &Subset, k: usize, rng: &mut R) -> Subset {
    if set.len() <= k {
        return set.clone();
    }
    let mut members = set.members().to_vec();
    let (chosen, _) = members.partial_shuffle(rng, k);
    chosen.iter().copied().collect()
}

/// Orders `set` uniformly at random and returns its best prefix (shortest on ties) with its
/// value. All `|set| + 1` prefixes are evaluated in one round; an empty set costs nothing
/// and comes back with no value.
pub fn best_prefix<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_>,
    set: &Subset,
    rng: &mut R,
) -> Result<(Subset, Option<f64>)> {
    if set.is_empty() {
        return Ok((Subset::empty(), None));
    }
    let mut order = set.members().to_vec();
    order.shuffle(rng);
    let prefixes: Vec<Subset> = (0..=order.len())
        .map(|len| order[..len].iter().copied().collect())
        .collect();
    let values = oracle.evaluate_batch(&prefixes)?;
    let (mut best, mut best_value) = (0, values[0]);
    for (len, &v) in values.iter().enumerate().skip(1) {
        if v > best_value {
            best = len;
            best_value = v;
        }
    }
    oracle.note_value(best_value);
    Ok((prefixes.into_iter().nth(best).expect("in range"), Some(best_value)))
}

fn run_trial(
    oracle: &mut Oracle<'_>,
    params: &NonmonotoneParams,
    index: usize,
    tau: f64,
    empty_value: f64,
    rng: &mut impl Rng,
) -> Result<ThresholdTrial> {
    let consts = params.constants();
    let ts_params = ThresholdParams::new(params.k, tau, consts.eps_hat, consts.delta_hat)
        .with_break_size(consts.break_size)
        .with_sample_override(params.sample_override)
        .with_debug_trace(params.debug_trace);
    let outcome = threshold_sampling(oracle, &ts_params, rng)?;
    let solution_value = match outcome.value {
        Some(v) => v,
        None => {
            let v = oracle.evaluate_batch(std::slice::from_ref(&outcome.solution))?[0];
            oracle.note_value(v);
            v
        }
    };

    let mut trial = ThresholdTrial {
        index,
        tau,
        solution_value,
        unconstrained: None,
        downsampled: None,
        prefix: None,
        prefix_value: None,
        best_local: outcome.solution.clone(),
        best_local_value: solution_value,
        outcome,
    };

    if trial.outcome.break_reason == BreakReason::SmallA {
        let mut um = UnconstrainedParams::new(consts.eps_hat, consts.delta_hat);
        if params.empty_candidate {
            um.empty_value = Some(empty_value);
        }
        let u = unconstrained_max(oracle, &trial.outcome.candidates, &um, rng)?;
        let u_prime = downsample(&u.set, params.k, rng);
        let (u_second, value) = best_prefix(oracle, &u_prime, rng)?;
        let value = value.unwrap_or(empty_value);
        if value > trial.best_local_value {
            trial.best_local = u_second.clone();
            trial.best_local_value = value;
        }
        trial.unconstrained = Some(u.set);
        trial.downsampled = Some(u_prime);
        trial.prefix = Some(u_second);
        trial.prefix_value = Some(value);
    }
    Ok(trial)
}

/// Runs the full threshold grid and returns the best set found.
pub fn adaptive_nonmonotone_max<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_>,
    params: &NonmonotoneParams,
    rng: &mut R,
) -> Result<NonmonotoneOutcome> {
    params.validate()?;
    let n = oracle.ground_size();
    if n == 0 {
        return Err(Error::Precondition("the ground set is empty".into()));
    }
    let consts = params.constants();

    // f(∅) rides along with the singletons so the running best starts from a known value.
    let mut first: Vec<Subset> = Vec::with_capacity(n + 1);
    first.push(Subset::empty());
    first.extend((0..n).map(|i| Subset::from_indices([i])));
    let values = oracle.evaluate_batch(&first)?;
    let empty_value = values[0];
    let delta_star = values[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    oracle.note_value(empty_value);

    let mut solution = Subset::empty();
    let mut value = empty_value;
    if delta_star <= 0.0 {
        return Ok(NonmonotoneOutcome {
            solution,
            value,
            max_singleton: delta_star,
            ledger: oracle.ledger().clone(),
            trials: Vec::new(),
        });
    }

    let trial_seed: u64 = rng.gen();
    let indices: Vec<usize> = (0..=consts.grid_max).collect();
    let root = oracle.fork();
    let results = oracle.execution().map(&indices, |&i| {
        let mut branch = root.fork().with_execution(match root.execution() {
            // Trials already fan out; keep each trial's batches on its own thread.
            Execution::Parallel => Execution::Sequential,
            Execution::Sequential => Execution::Sequential,
        });
        let mut trial_rng = stream_rng(trial_seed, i as u64);
        let tau = params.threshold(i, delta_star);
        run_trial(&mut branch, params, i, tau, empty_value, &mut trial_rng)
            .map(|trial| (trial, branch.into_ledger()))
    });

    let mut trials = Vec::with_capacity(results.len());
    let mut ledgers = Vec::with_capacity(results.len());
    for r in results {
        let (trial, ledger) = r?;
        trials.push(trial);
        ledgers.push(ledger);
    }
    oracle.absorb_parallel(&ledgers);

    for trial in &trials {
        if trial.solution_value > value {
            solution = trial.outcome.solution.clone();
            value = trial.solution_value;
        }
        if let (Some(prefix), Some(v)) = (&trial.prefix, trial.prefix_value) {
            if v > value {
                solution = prefix.clone();
                value = v;
            }
        }
    }

    Ok(NonmonotoneOutcome {
        solution,
        value,
        max_singleton: delta_star,
        ledger: oracle.ledger().clone(),
        trials,
    })
}

/// Grid indices whose threshold brackets `c₁·OPT/k`, i.e. `τᵢ ≤ c₁·OPT/k ≤ τᵢ(1+ε̂)`.
pub fn bracketing_indices(params: &NonmonotoneParams, max_singleton: f64, opt: f64) -> Vec<usize> {
    let consts = params.constants();
    let target = params.c1 * opt / params.k as f64;
    (0..=consts.grid_max)
        .filter(|&i| {
            let tau = params.threshold(i, max_singleton);
            tau <= target * (1.0 + 1e-12) && target <= tau * (1.0 + consts.eps_hat) * (1.0 + 1e-12)
        })
        .collect()
}

#[allow(dead_code)]
fn _assert_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<ElementId>();
    check::<ThresholdTrial>();
}
