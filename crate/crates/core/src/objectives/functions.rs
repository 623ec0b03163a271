use fixedbitset::FixedBitSet;

use super::data::{SimilarityMatrix, WeightedGraph};
use crate::oracle::{Objective, Subset};

/// Coverage minus a diversity penalty:
/// `f(S) = Σ_{i∈N} max_{j∈S} s_ij − (1/|N|) Σ_{i∈S} Σ_{j∈S} s_ij`, with `max ∅ = 0`.
#[derive(Clone, Debug)]
pub struct ImageSummarization {
    sim: SimilarityMatrix,
}

impl ImageSummarization {
    pub fn new(sim: SimilarityMatrix) -> Self {
        ImageSummarization { sim }
    }

    pub fn similarity(&self) -> &SimilarityMatrix {
        &self.sim
    }
}

impl Objective for ImageSummarization {
    fn ground_size(&self) -> usize {
        self.sim.size()
    }

    fn value(&self, set: &Subset) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        let n = self.sim.size();
        let members = set.members();
        let mut coverage = 0.0;
        for i in 0..n {
            let row = self.sim.row(i);
            coverage += members
                .iter()
                .map(|j| row[j.index()])
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let mut penalty = 0.0;
        for i in members {
            let row = self.sim.row(i.index());
            penalty += members.iter().map(|j| row[j.index()]).sum::<f64>();
        }
        coverage - penalty / n as f64
    }
}

/// `f(S) = Σ_{i∈N} Σ_{j∈S} s_ij − λ Σ_{i∈S} Σ_{j∈S} s_ij`.
#[derive(Clone, Debug)]
pub struct MovieRecommendation {
    sim: SimilarityMatrix,
    lambda: f64,
    column_sums: Vec<f64>,
}

impl MovieRecommendation {
    pub const DEFAULT_LAMBDA: f64 = 0.95;

    pub fn new(sim: SimilarityMatrix, lambda: f64) -> Self {
        let n = sim.size();
        let column_sums = (0..n).map(|j| (0..n).map(|i| sim.get(i, j)).sum()).collect();
        MovieRecommendation {
            sim,
            lambda,
            column_sums,
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn similarity(&self) -> &SimilarityMatrix {
        &self.sim
    }
}

impl Objective for MovieRecommendation {
    fn ground_size(&self) -> usize {
        self.sim.size()
    }

    fn value(&self, set: &Subset) -> f64 {
        let members = set.members();
        let relevance: f64 = members.iter().map(|j| self.column_sums[j.index()]).sum();
        let mut redundancy = 0.0;
        for i in members {
            let row = self.sim.row(i.index());
            redundancy += members.iter().map(|j| row[j.index()]).sum::<f64>();
        }
        relevance - self.lambda * redundancy
    }
}

/// Revenue from influenced non-buyers: `f(S) = Σ_{i∈N∖S} sqrt(Σ_{j∈S} w_ij)`.
#[derive(Clone, Debug)]
pub struct RevenueMaximization {
    graph: WeightedGraph,
}

impl RevenueMaximization {
    pub fn new(graph: WeightedGraph) -> Self {
        RevenueMaximization { graph }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }
}

impl Objective for RevenueMaximization {
    fn ground_size(&self) -> usize {
        self.graph.node_count()
    }

    fn value(&self, set: &Subset) -> f64 {
        let mut influence = vec![0.0f64; self.graph.node_count()];
        for j in set.indices() {
            for &(i, w) in self.graph.neighbors(j) {
                influence[i] += w;
            }
        }
        influence
            .iter()
            .enumerate()
            .filter(|&(i, &x)| x > 0.0 && !set.contains_index(i))
            .map(|(_, &x)| x.sqrt())
            .sum()
    }
}

/// Weighted cut: total weight of edges with exactly one endpoint in `S`.
#[derive(Clone, Debug)]
pub struct GraphCut {
    graph: WeightedGraph,
}

impl GraphCut {
    pub fn new(graph: WeightedGraph) -> Self {
        GraphCut { graph }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }
}

impl Objective for GraphCut {
    fn ground_size(&self) -> usize {
        self.graph.node_count()
    }

    fn value(&self, set: &Subset) -> f64 {
        // Multiplying by the membership bit instead of filtering keeps the loop free of
        // data-dependent branches, which mispredict constantly on random sets.
        set.indices()
            .flat_map(|u| self.graph.neighbors(u))
            .map(|&(v, w)| w * f64::from(u8::from(!set.contains_index(v))))
            .sum()
    }
}

/// `f(S) = Σ_{i∈S} w_i`.
#[derive(Clone, Debug)]
pub struct Modular {
    weights: Vec<f64>,
}

impl Modular {
    pub fn new(weights: Vec<f64>) -> Self {
        Modular { weights }
    }
}

impl Objective for Modular {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, set: &Subset) -> f64 {
        set.indices().map(|i| self.weights[i]).sum()
    }
}

/// Weighted set coverage: each element covers a set of items, `f(S)` is the total weight of
/// items covered by at least one member of `S`. Monotone.
#[derive(Clone, Debug)]
pub struct Coverage {
    covers: Vec<Vec<usize>>,
    item_weights: Vec<f64>,
}

impl Coverage {
    pub fn new(covers: Vec<Vec<usize>>, item_weights: Vec<f64>) -> Self {
        assert!(
            covers.iter().flatten().all(|&i| i < item_weights.len()),
            "coverage item out of range"
        );
        Coverage {
            covers,
            item_weights,
        }
    }
}

impl Objective for Coverage {
    fn ground_size(&self) -> usize {
        self.covers.len()
    }

    fn value(&self, set: &Subset) -> f64 {
        let mut covered = FixedBitSet::with_capacity(self.item_weights.len());
        let mut total = 0.0;
        for e in set.indices() {
            for &item in &self.covers[e] {
                if !covered.put(item) {
                    total += self.item_weights[item];
                }
            }
        }
        total
    }
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&Subset) -> f64 + Sync> FnObjective<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnObjective { n, f }
    }
}

impl<F: Fn(&Subset) -> f64 + Sync> Objective for FnObjective<F> {
    fn ground_size(&self) -> usize {
        self.n
    }

    fn value(&self, set: &Subset) -> f64 {
        (self.f)(set)
    }
}
