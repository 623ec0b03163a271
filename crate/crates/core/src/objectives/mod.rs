//! Experiment objectives, instance loading and generation, and exhaustive test oracles.

mod data;
mod functions;
mod validate;

use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::Rng;

pub use data::{
    load_edge_list, load_similarity_csv, parse_edge_list, parse_similarity_csv,
    write_edge_list, write_similarity_csv, SimilarityMatrix, WeightedGraph,
};
pub use functions::{
    Coverage, FnObjective, GraphCut, ImageSummarization, Modular, MovieRecommendation,
    RevenueMaximization,
};
pub use validate::{
    brute_force_opt, brute_force_within, check_submodularity, SubmodularityReport,
    BRUTE_FORCE_LIMIT,
};

use crate::error::{Error, Result};
use crate::oracle::{seeded_rng, Objective, Subset};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceKind {
    Image,
    Movie,
    Revenue,
    SyntheticCut,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 4] = [
        InstanceKind::Image,
        InstanceKind::Movie,
        InstanceKind::Revenue,
        InstanceKind::SyntheticCut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::Image => "image",
            InstanceKind::Movie => "movie",
            InstanceKind::Revenue => "revenue",
            InstanceKind::SyntheticCut => "synthetic-cut",
        }
    }

    /// Whether instances of this kind are backed by a similarity matrix (as opposed to a
    /// weighted graph).
    pub fn uses_similarity(self) -> bool {
        matches!(self, InstanceKind::Image | InstanceKind::Movie)
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InstanceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Unknown {
                what: "objective kind",
                name: s.to_string(),
            })
    }
}

/// A concrete problem: an objective kind together with its data.
#[derive(Clone, Debug)]
pub enum Instance {
    Image(ImageSummarization),
    Movie(MovieRecommendation),
    Revenue(RevenueMaximization),
    SyntheticCut(GraphCut),
}

impl Instance {
    pub fn from_similarity(kind: InstanceKind, sim: SimilarityMatrix, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        match kind {
            InstanceKind::Image => Ok(Instance::Image(ImageSummarization::new(sim))),
            InstanceKind::Movie => Ok(Instance::Movie(MovieRecommendation::new(sim, lambda))),
            other => Err(Error::InvalidParameter(format!(
                "{other} instances are built from a weighted graph"
            ))),
        }
    }

    pub fn from_graph(kind: InstanceKind, graph: WeightedGraph) -> Result<Self> {
        match kind {
            InstanceKind::Revenue => Ok(Instance::Revenue(RevenueMaximization::new(graph))),
            InstanceKind::SyntheticCut => Ok(Instance::SyntheticCut(GraphCut::new(graph))),
            other => Err(Error::InvalidParameter(format!(
                "{other} instances are built from a similarity matrix"
            ))),
        }
    }

    pub fn kind(&self) -> InstanceKind {
        match self {
            Instance::Image(_) => InstanceKind::Image,
            Instance::Movie(_) => InstanceKind::Movie,
            Instance::Revenue(_) => InstanceKind::Revenue,
            Instance::SyntheticCut(_) => InstanceKind::SyntheticCut,
        }
    }

    pub fn objective(&self) -> &dyn Objective {
        match self {
            Instance::Image(f) => f,
            Instance::Movie(f) => f,
            Instance::Revenue(f) => f,
            Instance::SyntheticCut(f) => f,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Instance::Movie(f) => Some(f.lambda()),
            _ => None,
        }
    }
}

impl Objective for Instance {
    fn ground_size(&self) -> usize {
        self.objective().ground_size()
    }

    fn value(&self, set: &Subset) -> f64 {
        self.objective().value(set)
    }
}

/// Parameters for [`generate_synthetic`].
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    /// Edge probability for graph kinds.
    pub p: f64,
    /// Feature dimension for similarity kinds.
    pub dim: usize,
    pub lambda: f64,
}

impl SyntheticSpec {
    pub fn new(n: usize) -> Self {
        SyntheticSpec {
            n,
            p: 0.1,
            dim: 16,
            lambda: MovieRecommendation::DEFAULT_LAMBDA,
        }
    }

    pub fn with_p(mut self, p: f64) -> Self {
        self.p = p;
        self
    }
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    /// Parses `n=300,p=0.01,dim=16,lambda=0.95`; only `n` is required.
    fn from_str(s: &str) -> Result<Self> {
        let invalid = |msg: String| Error::InvalidParameter(msg);
        let mut spec: Option<SyntheticSpec> = None;
        let mut rest = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| invalid(format!("expected key=value, found `{part}`")))?;
            if key.trim() == "n" {
                let n = value
                    .trim()
                    .parse()
                    .map_err(|_| invalid(format!("bad n `{value}`")))?;
                spec = Some(SyntheticSpec::new(n));
            } else {
                rest.push((key.trim(), value.trim()));
            }
        }
        let mut spec = spec.ok_or_else(|| invalid("synthetic spec needs n=<size>".into()))?;
        for (key, value) in rest {
            let bad = || invalid(format!("bad {key} `{value}`"));
            match key {
                "p" => spec.p = value.parse().map_err(|_| bad())?,
                "dim" => spec.dim = value.parse().map_err(|_| bad())?,
                "lambda" => spec.lambda = value.parse().map_err(|_| bad())?,
                _ => {
                    return Err(Error::Unknown {
                        what: "synthetic parameter",
                        name: key.to_string(),
                    })
                }
            }
        }
        Ok(spec)
    }
}

/// Erdős–Rényi graph `G(n, p)` with edge weights drawn from the open interval (0, 1).
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<WeightedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("edge probability {p} outside [0, 1]")));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.gen_bool(p) {
                edges.push((u, v, rng.sample(Open01)));
            }
        }
    }
    WeightedGraph::new(n, edges)
}

/// Cosine similarities of `n` random feature vectors with nonnegative coordinates.
pub fn random_cosine_similarity<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Result<SimilarityMatrix> {
    if dim == 0 {
        return Err(Error::InvalidParameter("feature dimension must be positive".into()));
    }
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(Open01)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    let rows = vectors
        .iter()
        .map(|a| {
            vectors
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    SimilarityMatrix::from_rows(rows)
}

/// Deterministic synthetic instance of the given kind.
pub fn generate_synthetic(kind: InstanceKind, spec: &SyntheticSpec, seed: u64) -> Result<Instance> {
    if spec.n == 0 {
        return Err(Error::InvalidParameter("instance size must be at least 1".into()));
    }
    let mut rng = seeded_rng(seed);
    if kind.uses_similarity() {
        let sim = random_cosine_similarity(spec.n, spec.dim, &mut rng)?;
        Instance::from_similarity(kind, sim, spec.lambda)
    } else {
        let graph = erdos_renyi(spec.n, spec.p, &mut rng)?;
        Instance::from_graph(kind, graph)
    }
}

/// Random unit-weight coverage instance: `n` elements over `items` items, each element
/// covering between `min_cover` and `max_cover` distinct items.
pub fn generate_coverage(n: usize, items: usize, min_cover: usize, max_cover: usize, seed: u64) -> Coverage {
    use rand::seq::index::sample;
    let mut rng = seeded_rng(seed);
    let covers = (0..n)
        .map(|_| {
            let size = rng.gen_range(min_cover..=max_cover).min(items);
            sample(&mut rng, items, size).into_vec()
        })
        .collect();
    Coverage::new(covers, vec![1.0; items])
}
