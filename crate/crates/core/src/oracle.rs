//! Evaluation oracles and the metering layer around them.
//!
//! Every algorithm in this crate talks to the objective through an [`Oracle`]. The oracle
//! owns a [`QueryLedger`] and exposes only batched evaluation: one call to
//! [`Oracle::evaluate_batch`] is one adaptive round, whatever the size of the batch. The
//! queries inside a batch are independent of each other and may be evaluated concurrently;
//! all randomness that shapes a batch is drawn by the caller before the batch is issued, so
//! results do not depend on the number of worker threads.

use std::fmt;

use fixedbitset::FixedBitSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of an element of the ground set `{0, .., n-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementId(pub usize);

impl ElementId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for ElementId {
    fn from(index: usize) -> Self {
        ElementId(index)
    }
}

impl fmt::Display for ElementId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A set of ground-set elements.
///
/// Members are kept sorted and deduplicated; a companion bitset answers membership queries
/// in constant time.
#[derive(Clone, Default)]
pub struct Subset {
    members: Vec<ElementId>,
    mask: FixedBitSet,
}

impl Subset {
    pub fn empty() -> Self {
        Subset::default()
    }

    /// Builds a subset from arbitrary indices. Duplicates are collapsed.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let mut members: Vec<ElementId> = indices.into_iter().map(ElementId).collect();
        members.sort_unstable();
        members.dedup();
        let mut mask = FixedBitSet::with_capacity(members.last().map_or(0, |m| m.0 + 1));
        for m in &members {
            mask.insert(m.0);
        }
        Subset { members, mask }
    }

    pub fn from_elements<I: IntoIterator<Item = ElementId>>(elements: I) -> Self {
        Subset::from_indices(elements.into_iter().map(ElementId::index))
    }

    /// The whole ground set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        Subset::from_indices(0..n)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.members.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    #[inline]
    pub fn contains(&self, x: ElementId) -> bool {
        self.mask.contains(x.0)
    }

    #[inline]
    pub fn contains_index(&self, i: usize) -> bool {
        self.mask.contains(i)
    }

    pub fn members(&self) -> &[ElementId] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.members.iter().copied()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().map(|e| e.0)
    }

    pub fn to_indices(&self) -> Vec<usize> {
        self.indices().collect()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.members.last().map(|e| e.0)
    }

    /// Inserts `x`; returns `false` when it was already a member.
    pub fn insert(&mut self, x: ElementId) -> bool {
        if self.contains(x) {
            return false;
        }
        self.mask.grow(x.0 + 1);
        self.mask.insert(x.0);
        let pos = self.members.partition_point(|&m| m < x);
        self.members.insert(pos, x);
        true
    }

    /// `self ∪ {x}` as a new subset.
    pub fn with(&self, x: ElementId) -> Subset {
        if self.contains(x) {
            return self.clone();
        }
        let pos = self.members.partition_point(|&m| m < x);
        let mut members = Vec::with_capacity(self.members.len() + 1);
        members.extend_from_slice(&self.members[..pos]);
        members.push(x);
        members.extend_from_slice(&self.members[pos..]);
        let mut mask = FixedBitSet::with_capacity(self.mask.len().max(x.0 + 1));
        mask.union_with(&self.mask);
        mask.insert(x.0);
        Subset { members, mask }
    }

    pub fn union(&self, other: &Subset) -> Subset {
        Subset::from_elements(self.iter().chain(other.iter()))
    }

    pub fn difference(&self, other: &Subset) -> Subset {
        Subset::from_elements(self.iter().filter(|&x| !other.contains(x)))
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        Subset::from_elements(self.iter().filter(|&x| other.contains(x)))
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.iter().all(|x| other.contains(x))
    }

    pub fn is_disjoint(&self, other: &Subset) -> bool {
        self.iter().all(|x| !other.contains(x))
    }

    /// Subset of `ground` selected by the low bits of `mask`.
    pub fn from_mask(ground: &[ElementId], mask: u64) -> Subset {
        Subset::from_elements(
            ground
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &x)| x),
        )
    }
}

impl PartialEq for Subset {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

impl Eq for Subset {}

impl std::hash::Hash for Subset {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.members.hash(state)
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.indices()).finish()
    }
}

impl FromIterator<ElementId> for Subset {
    fn from_iter<I: IntoIterator<Item = ElementId>>(iter: I) -> Self {
        Subset::from_elements(iter)
    }
}

/// A set function `f : 2^N -> R` over the ground set `{0, .., n-1}`.
///
/// Implementations must be deterministic and safe to evaluate from several threads at once.
pub trait Objective: Sync {
    fn ground_size(&self) -> usize;

    fn value(&self, set: &Subset) -> f64;
}

impl<T: Objective + ?Sized> Objective for &T {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }

    fn value(&self, set: &Subset) -> f64 {
        (**self).value(set)
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn ground_size(&self) -> usize {
        (**self).ground_size()
    }

    fn value(&self, set: &Subset) -> f64 {
        (**self).value(set)
    }
}

/// How a batch of independent work is executed.
///
/// `Parallel` uses the rayon thread pool when the `parallel` feature is enabled and falls
/// back to sequential execution otherwise. Results are identical in both modes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Maps `op` over `items`, preserving order.
    pub fn map<T, U, F>(self, items: &[T], op: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(op).collect(),
            Execution::Parallel => par_map(items, op),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, U, F>(items: &[T], op: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().with_min_len(8).map(op).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, U, F>(items: &[T], op: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(op).collect()
}

/// Queries issued in one adaptive round, and the best value of a returnable solution known
/// once that round completed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub index: usize,
    pub queries: u64,
    pub best_value: f64,
}

/// Metering record of oracle usage: total evaluations and adaptive rounds.
///
/// `total_queries` always equals the sum of the per-round counts, and `rounds()` is the
/// number of per-round records.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryLedger {
    total_queries: u64,
    per_round: Vec<RoundRecord>,
    indicator_samples: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total_queries(&self) -> u64 {
        self.total_queries
    }

    pub fn rounds(&self) -> usize {
        self.per_round.len()
    }

    pub fn per_round(&self) -> &[RoundRecord] {
        &self.per_round
    }

    /// Logical indicator samples drawn; each one costs two raw evaluations.
    pub fn indicator_samples(&self) -> u64 {
        self.indicator_samples
    }

    /// Best value known at the end of the last round, or `-inf` if none was recorded.
    pub fn best_value(&self) -> f64 {
        self.per_round
            .last()
            .map_or(f64::NEG_INFINITY, |r| r.best_value)
    }

    pub fn is_consistent(&self) -> bool {
        let sum: u64 = self.per_round.iter().map(|r| r.queries).sum();
        sum == self.total_queries && self.per_round.iter().enumerate().all(|(i, r)| r.index == i)
    }

    fn record_round(&mut self, queries: u64) {
        let best_value = self.best_value();
        self.per_round.push(RoundRecord {
            index: self.per_round.len(),
            queries,
            best_value,
        });
        self.total_queries += queries;
    }

    fn note_value(&mut self, value: f64) {
        if let Some(last) = self.per_round.last_mut() {
            if value > last.best_value {
                last.best_value = value;
            }
        }
    }

    /// Appends `later` as rounds that happen strictly after the ones already recorded.
    pub fn append(&mut self, later: &QueryLedger) {
        let carried = self.best_value();
        for r in &later.per_round {
            self.per_round.push(RoundRecord {
                index: self.per_round.len(),
                queries: r.queries,
                best_value: r.best_value.max(carried),
            });
        }
        self.total_queries += later.total_queries;
        self.indicator_samples += later.indicator_samples;
    }

    /// Combines ledgers of logically parallel computations.
    ///
    /// Round `i` of the result holds the queries every branch issued in its own round `i`,
    /// so the merged round count is the maximum over branches and the query count is the
    /// sum. A branch that has finished keeps contributing its final best value.
    pub fn merge_parallel(branches: &[QueryLedger]) -> QueryLedger {
        let rounds = branches.iter().map(QueryLedger::rounds).max().unwrap_or(0);
        let mut merged = QueryLedger::new();
        for i in 0..rounds {
            let mut queries = 0;
            let mut best = f64::NEG_INFINITY;
            for b in branches {
                if let Some(r) = b.per_round.get(i) {
                    queries += r.queries;
                }
                if let Some(r) = b.per_round.get(i).or(b.per_round.last()) {
                    best = best.max(r.best_value);
                }
            }
            merged.per_round.push(RoundRecord {
                index: i,
                queries,
                best_value: best,
            });
            merged.total_queries += queries;
        }
        merged.indicator_samples = branches.iter().map(|b| b.indicator_samples).sum();
        merged
    }
}

/// Metered access to an [`Objective`].
pub struct Oracle<'a> {
    objective: &'a dyn Objective,
    ledger: QueryLedger,
    execution: Execution,
}

impl<'a> Oracle<'a> {
    pub fn new(objective: &'a dyn Objective) -> Self {
        Oracle {
            objective,
            ledger: QueryLedger::new(),
            execution: Execution::default(),
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn ground_size(&self) -> usize {
        self.objective.ground_size()
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> QueryLedger {
        self.ledger
    }

    /// A fresh oracle over the same objective with an empty ledger.
    pub fn fork(&self) -> Oracle<'a> {
        Oracle {
            objective: self.objective,
            ledger: QueryLedger::new(),
            execution: self.execution,
        }
    }

    /// Records the rounds of a sub-computation that ran after everything metered so far.
    pub fn absorb_sequential(&mut self, later: &QueryLedger) {
        self.ledger.append(later);
    }

    /// Records a set of sub-computations that ran side by side.
    pub fn absorb_parallel(&mut self, branches: &[QueryLedger]) {
        let merged = QueryLedger::merge_parallel(branches);
        self.ledger.append(&merged);
    }

    /// Reports the value of a solution the caller could return, for progress tracing.
    pub fn note_value(&mut self, value: f64) {
        self.ledger.note_value(value);
    }

    pub(crate) fn count_indicator_samples(&mut self, samples: u64) {
        self.ledger.indicator_samples += samples;
    }

    /// Evaluates all `queries` as one adaptive round.
    pub fn evaluate_batch(&mut self, queries: &[Subset]) -> Result<Vec<f64>> {
        if queries.is_empty() {
            return Err(Error::EmptyBatch);
        }
        let n = self.objective.ground_size();
        for q in queries {
            if let Some(index) = q.max_index().filter(|&i| i >= n) {
                return Err(Error::InvalidSubset { index, n });
            }
        }
        let objective = self.objective;
        let values = self.execution.map(queries, |q| objective.value(q));
        self.ledger.record_round(queries.len() as u64);
        Ok(values)
    }

    /// `Δ(x, base)` for every candidate in one round, reusing a known `f(base)`.
    pub fn batch_marginals(
        &mut self,
        base: &Subset,
        candidates: &[ElementId],
        base_value: f64,
    ) -> Result<Vec<f64>> {
        let queries: Vec<Subset> = candidates.iter().map(|&x| base.with(x)).collect();
        let values = self.evaluate_batch(&queries)?;
        Ok(values.into_iter().map(|v| v - base_value).collect())
    }

    /// Like [`Oracle::batch_marginals`], but evaluates `f(base)` in the same round.
    /// Returns `f(base)`, the raw values `f(base ∪ {x})` and the marginals.
    pub fn batch_extensions(
        &mut self,
        base: &Subset,
        candidates: &[ElementId],
    ) -> Result<Extensions> {
        let mut queries = Vec::with_capacity(candidates.len() + 1);
        queries.push(base.clone());
        queries.extend(candidates.iter().map(|&x| base.with(x)));
        let mut values = self.evaluate_batch(&queries)?;
        let base_value = values.remove(0);
        Ok(Extensions { base_value, values })
    }
}

/// Result of [`Oracle::batch_extensions`].
#[derive(Clone, Debug)]
pub struct Extensions {
    pub base_value: f64,
    /// `f(base ∪ {x})` in candidate order.
    pub values: Vec<f64>,
}

impl Extensions {
    pub fn marginal(&self, i: usize) -> f64 {
        self.values[i] - self.base_value
    }

    pub fn marginals(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |v| v - self.base_value)
    }
}

/// Deterministic pseudorandom generator used throughout the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Modular(Vec<f64>);

    impl Objective for Modular {
        fn ground_size(&self) -> usize {
            self.0.len()
        }

        fn value(&self, set: &Subset) -> f64 {
            set.indices().map(|i| self.0[i]).sum()
        }
    }

    struct PathCut;

    impl Objective for PathCut {
        fn ground_size(&self) -> usize {
            3
        }

        fn value(&self, set: &Subset) -> f64 {
            [(0, 1), (1, 2)]
                .iter()
                .filter(|&&(u, v)| set.contains_index(u) != set.contains_index(v))
                .count() as f64
        }
    }

    fn s(ix: &[usize]) -> Subset {
        Subset::from_indices(ix.iter().copied())
    }

    #[test]
    fn evaluate_batch_modular() {
        let f = Modular(vec![1.0, 2.0, 3.0]);
        let mut oracle = Oracle::new(&f);
        let values = oracle.evaluate_batch(&[s(&[0]), s(&[0, 1]), s(&[])]).unwrap();
        assert_eq!(values, vec![1.0, 3.0, 0.0]);
        assert_eq!(oracle.ledger().rounds(), 1);
        assert_eq!(oracle.ledger().total_queries(), 3);
    }

    #[test]
    fn evaluate_batch_empty_query() {
        let f = Modular(vec![1.0, 2.0, 3.0]);
        let mut oracle = Oracle::new(&f);
        assert_eq!(oracle.evaluate_batch(&[Subset::empty()]).unwrap(), vec![0.0]);
        assert_eq!(oracle.ledger().rounds(), 1);
        assert_eq!(oracle.ledger().total_queries(), 1);
    }

    #[test]
    fn path_cut_counts_both_edges() {
        let mut oracle = Oracle::new(&PathCut);
        assert_eq!(oracle.evaluate_batch(&[s(&[1])]).unwrap(), vec![2.0]);
    }

    #[test]
    fn out_of_range_and_empty_batches_are_errors() {
        let f = Modular(vec![1.0, 2.0, 3.0]);
        let mut oracle = Oracle::new(&f);
        assert!(matches!(
            oracle.evaluate_batch(&[s(&[3])]),
            Err(Error::InvalidSubset { index: 3, n: 3 })
        ));
        assert!(matches!(oracle.evaluate_batch(&[]), Err(Error::EmptyBatch)));
        assert_eq!(oracle.ledger().rounds(), 0);
    }

    #[test]
    fn marginals_reuse_base_value() {
        let f = Modular(vec![1.0, 2.0, 3.0]);
        let mut oracle = Oracle::new(&f);
        let ids: Vec<ElementId> = (0..3).map(ElementId).collect();
        let m = oracle.batch_marginals(&Subset::empty(), &ids, 0.0).unwrap();
        assert_eq!(m, vec![1.0, 2.0, 3.0]);
        let m = oracle.batch_marginals(&s(&[0]), &[ElementId(0)], 1.0).unwrap();
        assert_eq!(m, vec![0.0]);
        assert_eq!(oracle.ledger().rounds(), 2);
        assert_eq!(oracle.ledger().total_queries(), 4);
    }

    #[test]
    fn subset_basics() {
        let mut a = s(&[3, 1, 3, 0]);
        assert_eq!(a.to_indices(), vec![0, 1, 3]);
        assert!(a.contains(ElementId(3)));
        assert!(!a.contains(ElementId(2)));
        assert!(!a.contains(ElementId(1000)));
        assert!(a.insert(ElementId(2)));
        assert!(!a.insert(ElementId(2)));
        assert_eq!(a.to_indices(), vec![0, 1, 2, 3]);
        let b = s(&[2, 5]);
        assert_eq!(a.union(&b).to_indices(), vec![0, 1, 2, 3, 5]);
        assert_eq!(a.difference(&b).to_indices(), vec![0, 1, 3]);
        assert_eq!(a.intersection(&b).to_indices(), vec![2]);
        let ground: Vec<ElementId> = [4, 7, 9].map(ElementId).to_vec();
        assert_eq!(Subset::from_mask(&ground, 0b101).to_indices(), vec![4, 9]);
    }

    #[test]
    fn merge_parallel_takes_max_rounds_and_sums_queries() {
        let f = Modular(vec![1.0, 2.0, 3.0]);
        let root = Oracle::new(&f);
        let mut a = root.fork();
        let mut b = root.fork();
        a.evaluate_batch(&[s(&[0])]).unwrap();
        a.note_value(1.0);
        b.evaluate_batch(&[s(&[1]), s(&[2])]).unwrap();
        b.note_value(2.0);
        b.evaluate_batch(&[s(&[1, 2])]).unwrap();
        b.note_value(5.0);
        let merged = QueryLedger::merge_parallel(&[a.into_ledger(), b.into_ledger()]);
        assert_eq!(merged.rounds(), 2);
        assert_eq!(merged.total_queries(), 4);
        assert_eq!(merged.per_round()[0].queries, 3);
        assert_eq!(merged.per_round()[0].best_value, 2.0);
        assert_eq!(merged.per_round()[1].best_value, 5.0);
        assert!(merged.is_consistent());
    }

    #[test]
    fn stream_rngs_are_reproducible_and_distinct() {
        use rand::Rng;
        let x: u64 = stream_rng(9, 1).gen();
        let y: u64 = stream_rng(9, 1).gen();
        let z: u64 = stream_rng(9, 2).gen();
        assert_eq!(x, y);
        assert_ne!(x, z);
    }
}
