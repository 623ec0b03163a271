use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use submax::acceptance::Suite;
use submax::objectives::{InstanceKind, SyntheticSpec};
use submax_bench::experiment::{
    run_experiment, write_debug_jsonl, write_summary_csv, write_trace_csv, Algorithm, RunConfig, Source,
};

#[derive(Parser, Debug)]
#[command(name = "submax-bench", version, about = "Run submodular maximization sweeps and acceptance suites")]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an acceptance suite and print one verdict line per criterion.
    Accept {
        /// lemma2, lemma4, lemma7, lemma8, theorem5, appendix, ledgers, figure1,
        /// submodularity, all, or a single criterion name.
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct RunArgs {
    /// image, movie, revenue or synthetic-cut.
    #[arg(long)]
    objective: Option<String>,
    /// Similarity CSV (image, movie) or `u,v,w` edge list (revenue, synthetic-cut).
    #[arg(long, conflicts_with = "synthetic")]
    data: Option<PathBuf>,
    /// Synthetic instance, e.g. "n=300,p=0.01".
    #[arg(long)]
    synthetic: Option<String>,
    #[arg(long, value_enum, default_value_t = Algorithm::Anm)]
    algorithm: Algorithm,
    #[arg(long, conflicts_with = "k_list")]
    k: Option<usize>,
    /// Comma-separated list of k values.
    #[arg(long, value_delimiter = ',')]
    k_list: Option<Vec<usize>>,
    /// Defaults to 0.25, or 0.01 for rlg.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Indicator samples per estimate.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Use the theoretical sample count instead of --samples.
    #[arg(long)]
    theoretical_samples: bool,
    /// Movie objective trade-off λ.
    #[arg(long)]
    lambda: Option<f64>,
    /// Node count for edge lists with isolated trailing nodes.
    #[arg(long)]
    nodes: Option<usize>,
    /// Summary CSV; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-round trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON lines with threshold-sampling round snapshots (anm only).
    #[arg(long)]
    debug_trace: Option<PathBuf>,
    /// Omit the leading timestamp comment from CSV output.
    #[arg(long)]
    no_timestamp: bool,
}

fn config(args: &RunArgs) -> Result<RunConfig> {
    let Some(objective) = &args.objective else {
        bail!("--objective is required (or use the `accept` subcommand)");
    };
    let objective: InstanceKind = objective.parse()?;
    let source = match (&args.data, &args.synthetic) {
        (Some(path), None) => Source::Data(path.clone()),
        (None, Some(spec)) => Source::Synthetic(spec.parse::<SyntheticSpec>()?),
        _ => bail!("exactly one of --data or --synthetic is required"),
    };
    let ks = match (&args.k, &args.k_list) {
        (Some(k), None) => vec![*k],
        (None, Some(list)) => list.clone(),
        _ => bail!("one of --k or --k-list is required"),
    };
    let mut cfg = RunConfig::new(objective, source, args.algorithm, ks[0]);
    cfg.ks = ks;
    cfg.eps = args.eps;
    cfg.delta = args.delta;
    cfg.trials = args.trials;
    cfg.seed = args.seed;
    cfg.samples = (!args.theoretical_samples).then_some(args.samples);
    cfg.lambda = args.lambda;
    cfg.nodes = args.nodes;
    cfg.debug_trace = args.debug_trace.is_some();
    Ok(cfg)
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = config(args)?;
    let trace = run_experiment(&cfg)?;
    let stamp = (!args.no_timestamp).then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        format!("generated at unix time {secs}")
    });
    let comment = stamp.as_deref();
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_summary_csv(&trace.summary, BufWriter::new(file), comment)?;
        }
        None => write_summary_csv(&trace.summary, io::stdout().lock(), comment)?,
    }
    if let Some(path) = &args.trace {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_trace_csv(&trace.rows, BufWriter::new(file), comment)?;
    }
    if let Some(path) = &args.debug_trace {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        write_debug_jsonl(&trace.debug, BufWriter::new(file))?;
    }
    Ok(())
}

fn accept(suite: &str, seed: u64) -> Result<bool> {
    let suite: Suite = suite.parse()?;
    let mut all_passed = true;
    for c in suite.criteria() {
        let report = c.run(seed)?;
        println!("{report}");
        all_passed &= report.passed;
    }
    Ok(all_passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Some(Command::Accept { suite, seed }) => accept(suite, *seed),
        None => run(&cli.run).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
