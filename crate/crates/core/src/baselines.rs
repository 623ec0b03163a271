//! Reference algorithms: fully adaptive greedy, a one-round random prefix, and a randomized
//! lazy greedy that picks uniformly among the current top-k marginals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle::{ElementId, Oracle, Subset};

#[derive(Clone, Debug)]
pub struct Solution {
    pub set: Subset,
    pub value: f64,
    /// Members in the order they were chosen.
    pub order: Vec<ElementId>,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok(())
}

/// Adds the element with the largest positive marginal, one batch per step, until `k`
/// elements are chosen or no marginal is positive. Ties go to the lowest index.
///
/// `f(∅)` is evaluated together with the first batch of marginals.
pub fn greedy(oracle: &mut Oracle<'_>, k: usize) -> Result<Solution> {
    check_k(k)?;
    let n = oracle.ground_size();
    let mut set = Subset::empty();
    let mut remaining: Vec<ElementId> = (0..n).map(ElementId).collect();
    let mut order = Vec::new();
    let mut value = None;

    while set.len() < k && !remaining.is_empty() {
        let (base, gains) = match value {
            None => {
                let ext = oracle.batch_extensions(&set, &remaining)?;
                (ext.base_value, ext.marginals().collect::<Vec<_>>())
            }
            Some(v) => (v, oracle.batch_marginals(&set, &remaining, v)?),
        };
        value = Some(base);
        oracle.note_value(base);
        let mut best: Option<(usize, f64)> = None;
        for (i, &g) in gains.iter().enumerate() {
            if g > 0.0 && best.is_none_or(|(_, b)| g > b) {
                best = Some((i, g));
            }
        }
        let Some((i, gain)) = best else { break };
        let x = remaining.remove(i);
        set.insert(x);
        order.push(x);
        value = Some(base + gain);
        oracle.note_value(base + gain);
    }

    let value = match value {
        Some(v) => v,
        // Nothing was queried: n = 0.
        None => return Err(Error::Precondition("the ground set is empty".into())),
    };
    Ok(Solution { set, value, order })
}

/// Orders the ground set at random and returns its best prefix of length at most `k`
/// (shortest on ties). One round of `min(k, n) + 1` queries.
pub fn random_prefix<R: Rng + ?Sized>(oracle: &mut Oracle<'_>, k: usize, rng: &mut R) -> Result<Solution> {
    check_k(k)?;
    let n = oracle.ground_size();
    let mut order: Vec<ElementId> = (0..n).map(ElementId).collect();
    order.shuffle(rng);
    let prefixes: Vec<Subset> = (0..=k.min(n))
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
    order.truncate(best);
    Ok(Solution {
        set: prefixes.into_iter().nth(best).expect("in range"),
        value: best_value,
        order,
    })
}

#[derive(Clone, Copy, Debug)]
struct Bound {
    gain: f64,
    element: ElementId,
    /// Size of the solution when `gain` was computed.
    epoch: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    // Largest gain first; lower index first among equal gains.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.element.cmp(&self.element))
    }
}

/// Randomized lazy greedy. Each step finds the `k` largest current marginals, refreshing
/// stale upper bounds in batches only while a stale bound sits among the top `k`, then adds
/// one of the positive ones uniformly at random. Stops after `k` additions or when no
/// marginal is positive.
///
/// `eps` is accepted for interface parity with the other algorithms and does not affect
/// the run.
pub fn random_lazy_greedy<R: Rng + ?Sized>(
    oracle: &mut Oracle<'_>,
    k: usize,
    eps: f64,
    rng: &mut R,
) -> Result<Solution> {
    check_k(k)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    let n = oracle.ground_size();
    if n == 0 {
        return Err(Error::Precondition("the ground set is empty".into()));
    }
    let all: Vec<ElementId> = (0..n).map(ElementId).collect();
    let ext = oracle.batch_extensions(&Subset::empty(), &all)?;
    let mut value = ext.base_value;
    oracle.note_value(value);
    let mut heap: BinaryHeap<Bound> = all
        .iter()
        .zip(ext.marginals())
        .map(|(&element, gain)| Bound { gain, element, epoch: 0 })
        .collect();
    let mut set = Subset::empty();
    let mut order = Vec::new();

    while set.len() < k {
        let epoch = set.len();
        let top = loop {
            let mut top = Vec::with_capacity(k);
            while top.len() < k {
                match heap.pop() {
                    Some(b) => top.push(b),
                    None => break,
                }
            }
            let stale: Vec<ElementId> = top.iter().filter(|b| b.epoch != epoch).map(|b| b.element).collect();
            if stale.is_empty() {
                break top;
            }
            let gains = oracle.batch_marginals(&set, &stale, value)?;
            let mut fresh = gains.into_iter();
            for b in top.iter_mut().filter(|b| b.epoch != epoch) {
                b.gain = fresh.next().expect("one gain per stale bound");
                b.epoch = epoch;
            }
            heap.extend(top);
        };
        let positive: Vec<Bound> = top.iter().copied().filter(|b| b.gain > 0.0).collect();
        heap.extend(top);
        let Some(pick) = positive.choose(rng).copied() else { break };
        heap.retain(|b| b.element != pick.element);
        set.insert(pick.element);
        order.push(pick.element);
        value += pick.gain;
        oracle.note_value(value);
    }

    Ok(Solution { set, value, order })
}
