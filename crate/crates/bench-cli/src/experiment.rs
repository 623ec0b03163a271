//! Algorithm sweeps over one instance, with per-round traces and per-k summaries.

use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use submax::objectives::{
    generate_synthetic, load_edge_list, load_similarity_csv, Instance, InstanceKind, SyntheticSpec,
};
use submax::threshold::RoundSnapshot;
use submax::{
    adaptive_nonmonotone_max, greedy, random_lazy_greedy, random_prefix, seeded_rng, Execution,
    NonmonotoneParams, Objective, Oracle, QueryLedger,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Algorithm {
    Anm,
    Greedy,
    Random,
    Rlg,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Anm => "anm",
            Algorithm::Greedy => "greedy",
            Algorithm::Random => "random",
            Algorithm::Rlg => "rlg",
        }
    }

    pub fn default_eps(self) -> f64 {
        match self {
            Algorithm::Rlg => 0.01,
            _ => 0.25,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anm" => Ok(Algorithm::Anm),
            "greedy" => Ok(Algorithm::Greedy),
            "random" => Ok(Algorithm::Random),
            "rlg" => Ok(Algorithm::Rlg),
            other => bail!("unknown algorithm `{other}` (expected anm, greedy, random or rlg)"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Source {
    Data(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub objective: InstanceKind,
    pub source: Source,
    pub algorithm: Algorithm,
    pub ks: Vec<usize>,
    /// Defaults to [`Algorithm::default_eps`].
    pub eps: Option<f64>,
    pub delta: f64,
    pub trials: u64,
    pub seed: u64,
    /// Samples per estimate; `None` uses the theoretical count.
    pub samples: Option<usize>,
    /// Overrides the movie objective's λ.
    pub lambda: Option<f64>,
    /// Node count for edge-list data.
    pub nodes: Option<usize>,
    pub debug_trace: bool,
}

impl RunConfig {
    pub fn new(objective: InstanceKind, source: Source, algorithm: Algorithm, k: usize) -> Self {
        RunConfig {
            objective,
            source,
            algorithm,
            ks: vec![k],
            eps: None,
            delta: 0.1,
            trials: 1,
            seed: 0,
            samples: Some(100),
            lambda: None,
            nodes: None,
            debug_trace: false,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps.unwrap_or_else(|| self.algorithm.default_eps())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub algorithm: String,
    pub trial: u64,
    pub round: usize,
    pub cum_queries: u64,
    pub best_value: f64,
    pub k: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub k: usize,
    pub mean_value: f64,
    pub std_value: f64,
    pub mean_queries: f64,
    pub mean_rounds: f64,
}

/// Threshold-sampling snapshots of one ANM trial, emitted as JSON lines on request.
#[derive(Clone, Debug, Serialize)]
pub struct DebugRecord {
    pub k: usize,
    pub trial: u64,
    pub grid_index: usize,
    pub tau: f64,
    #[serde(flatten)]
    pub snapshot: RoundSnapshot,
}

#[derive(Clone, Debug, Default)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub summary: Vec<SummaryRow>,
    pub debug: Vec<DebugRecord>,
}

pub fn load_instance(cfg: &RunConfig) -> Result<Instance> {
    let kind = cfg.objective;
    let instance = match &cfg.source {
        Source::Synthetic(spec) => {
            let mut spec = spec.clone();
            if let Some(lambda) = cfg.lambda {
                spec.lambda = lambda;
            }
            generate_synthetic(kind, &spec, cfg.seed)?
        }
        Source::Data(path) if kind.uses_similarity() => {
            let sim = load_similarity_csv(path).with_context(|| format!("loading {}", path.display()))?;
            let lambda = cfg.lambda.unwrap_or(submax::objectives::MovieRecommendation::DEFAULT_LAMBDA);
            Instance::from_similarity(kind, sim, lambda)?
        }
        Source::Data(path) => {
            let graph = load_edge_list(path, cfg.nodes).with_context(|| format!("loading {}", path.display()))?;
            Instance::from_graph(kind, graph)?
        }
    };
    Ok(instance)
}

struct TrialResult {
    value: f64,
    ledger: QueryLedger,
    debug: Vec<DebugRecord>,
}

fn run_trial(f: &Instance, cfg: &RunConfig, k: usize, trial: u64) -> Result<TrialResult> {
    let seed = cfg.seed.wrapping_add(trial);
    let mut rng = seeded_rng(seed);
    // Trials already run side by side.
    let mut oracle = Oracle::new(f).with_execution(Execution::Sequential);
    let mut debug = Vec::new();
    let value = match cfg.algorithm {
        Algorithm::Anm => {
            let mut params = NonmonotoneParams::new(k, cfg.eps(), cfg.delta).with_sample_override(cfg.samples);
            params.debug_trace = cfg.debug_trace;
            let out = adaptive_nonmonotone_max(&mut oracle, &params, &mut rng)?;
            for t in &out.trials {
                debug.extend(t.outcome.snapshots.iter().map(|s| DebugRecord {
                    k,
                    trial,
                    grid_index: t.index,
                    tau: t.tau,
                    snapshot: s.clone(),
                }));
            }
            out.value
        }
        Algorithm::Greedy => greedy(&mut oracle, k)?.value,
        Algorithm::Random => random_prefix(&mut oracle, k, &mut rng)?.value,
        Algorithm::Rlg => random_lazy_greedy(&mut oracle, k, cfg.eps(), &mut rng)?.value,
    };
    Ok(TrialResult {
        value,
        ledger: oracle.into_ledger(),
        debug,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation. Values are shifted by the first one, so identical inputs
/// give exactly zero.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let shifted: Vec<f64> = xs.iter().map(|x| x - xs[0]).collect();
    let m = mean(&shifted);
    let var = shifted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

fn trace_rows(cfg: &RunConfig, k: usize, trial: u64, ledger: &QueryLedger) -> Vec<TraceRow> {
    let mut cum = 0;
    let mut best = f64::NEG_INFINITY;
    ledger
        .per_round()
        .iter()
        .map(|r| {
            cum += r.queries;
            best = best.max(r.best_value);
            TraceRow {
                algorithm: cfg.algorithm.name().to_string(),
                trial,
                round: r.index + 1,
                cum_queries: cum,
                best_value: best,
                k,
                seed: cfg.seed.wrapping_add(trial),
            }
        })
        .collect()
}

pub fn validate(cfg: &RunConfig, n: usize) -> Result<()> {
    ensure!(cfg.trials >= 1, "trials must be at least 1");
    ensure!(!cfg.ks.is_empty(), "at least one k is required");
    for &k in &cfg.ks {
        ensure!(k >= 1, "k must be at least 1");
        ensure!(k <= n, "k = {k} exceeds the ground set size {n}");
    }
    ensure!(cfg.samples != Some(0), "--samples must be positive");
    Ok(())
}

pub fn run_experiment(cfg: &RunConfig) -> Result<RunTrace> {
    let f = load_instance(cfg)?;
    validate(cfg, f.ground_size())?;
    let mut trace = RunTrace::default();
    for &k in &cfg.ks {
        let results: Vec<TrialResult> = (0..cfg.trials)
            .into_par_iter()
            .map(|trial| run_trial(&f, cfg, k, trial))
            .collect::<Result<_>>()?;
        for (trial, r) in results.iter().enumerate() {
            trace.rows.extend(trace_rows(cfg, k, trial as u64, &r.ledger));
        }
        let values: Vec<f64> = results.iter().map(|r| r.value).collect();
        let queries: Vec<f64> = results.iter().map(|r| r.ledger.total_queries() as f64).collect();
        let rounds: Vec<f64> = results.iter().map(|r| r.ledger.rounds() as f64).collect();
        log::info!("{} k={k}: mean value {:.4} over {} trials", cfg.algorithm, mean(&values), cfg.trials);
        trace.summary.push(SummaryRow {
            algorithm: cfg.algorithm.name().to_string(),
            k,
            mean_value: mean(&values),
            std_value: std_dev(&values),
            mean_queries: mean(&queries),
            mean_rounds: mean(&rounds),
        });
        trace.debug.extend(results.into_iter().flat_map(|r| r.debug));
    }
    Ok(trace)
}

fn write_rows<W: Write, T: Serialize>(rows: &[T], header: &[&str], mut out: W, comment: Option<&str>) -> Result<()> {
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    // Written explicitly so an empty table still carries its header.
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub const TRACE_HEADER: [&str; 7] = ["algorithm", "trial", "round", "cum_queries", "best_value", "k", "seed"];
pub const SUMMARY_HEADER: [&str; 6] = ["algorithm", "k", "mean_value", "std_value", "mean_queries", "mean_rounds"];

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], out: W, comment: Option<&str>) -> Result<()> {
    write_rows(rows, &TRACE_HEADER, out, comment)
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W, comment: Option<&str>) -> Result<()> {
    write_rows(rows, &SUMMARY_HEADER, out, comment)
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(input: R) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceRow>> {
    read_rows(input)
}

pub fn read_summary_csv<R: Read>(input: R) -> Result<Vec<SummaryRow>> {
    read_rows(input)
}

pub fn write_debug_jsonl<W: Write>(records: &[DebugRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}
