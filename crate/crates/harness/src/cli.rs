//! Command-line interface: `gen`, `train`, `eval`, `baseline`, `report`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ptrnet_ea_core::evolution::TaskPool;
use ptrnet_ea_core::portfolio::{evaluate_portfolio, Portfolio};
use ptrnet_ea_core::ptrnet::batch_decode;
use ptrnet_ea_core::tsp::{
    self, brute_force_optimal, generate_dataset, nearest_neighbor_tour, tour_length, two_opt,
    Dataset, Split,
};

use crate::checkpoint::Checkpoint;
use crate::dataset_io;
use crate::pool::RayonPool;
use crate::report::{self, EvalReport, PortfolioSection, REPORT_SCHEMA_VERSION};
use crate::runconfig::RunConfig;
use crate::runner;

#[derive(Parser, Debug)]
#[command(
    name = "ptrnet-ea",
    version,
    about = "Train pointer networks for Euclidean TSP with negatively correlated search"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads for parallel evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Override the seed from the config file or subcommand default.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output path (gen/eval/baseline: a file; train/report: a directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset file.
    Gen(GenArgs),
    /// Run (or resume) a training run described by a config file.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Evaluate a classical solver on a dataset.
    Baseline(BaselineArgs),
    /// Consolidate run directories into comparison tables and curves.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Nodes per instance (or use --preset).
    #[arg(long)]
    pub n: Option<usize>,
    /// Named sizes: tsp100, tsp500, tsp1000.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Number of instances.
    #[arg(long)]
    pub count: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Which split the file belongs to.
    #[arg(long, value_enum)]
    pub split: SplitArg,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum Preset {
    Tsp100,
    Tsp500,
    Tsp1000,
}

impl Preset {
    fn n(self) -> usize {
        match self {
            Preset::Tsp100 => 100,
            Preset::Tsp500 => 500,
            Preset::Tsp1000 => 1000,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Preset::Tsp100 => "tsp100",
            Preset::Tsp500 => "tsp500",
            Preset::Tsp1000 => "tsp1000",
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Split {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Run config file (key = value lines; see README).
    #[arg(long)]
    pub config: PathBuf,
    /// Continue from the checkpoint in the run directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalMode::Best)]
    pub mode: EvalMode,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq)]
pub enum EvalMode {
    /// Decode with the best-ever individual only.
    Best,
    /// Best-of-population decoding plus contribution analysis.
    Portfolio,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum)]
    pub method: BaselineMethod,
    /// 2-opt sweep limit.
    #[arg(long, default_value_t = 1000)]
    pub max_passes: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq)]
pub enum BaselineMethod {
    /// Nearest-neighbor construction from node 0.
    Nn,
    /// Nearest-neighbor followed by first-improvement 2-opt.
    TwoOpt,
    /// Exhaustive optimum; refuses n > 10.
    Oracle,
}

impl BaselineMethod {
    fn kind(self) -> &'static str {
        match self {
            BaselineMethod::Nn => "baseline-nn",
            BaselineMethod::TwoOpt => "baseline-two-opt",
            BaselineMethod::Oracle => "baseline-oracle",
        }
    }
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run directories produced by `train`.
    pub run_dirs: Vec<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => gen(args, cli.seed, cli.out),
        Command::Train(args) => train(args, cli.seed, cli.out, cli.threads),
        Command::Eval(args) => eval(args, cli.out, cli.threads),
        Command::Baseline(args) => baseline(args, cli.out, cli.threads),
        Command::Report(args) => report_cmd(args, cli.out),
    }
}

fn gen(args: GenArgs, seed_override: Option<u64>, out: Option<PathBuf>) -> Result<()> {
    let n = match (args.n, args.preset) {
        (Some(n), None) => n,
        (None, Some(p)) => p.n(),
        (Some(_), Some(_)) => bail!("give either --n or --preset, not both"),
        (None, None) => bail!("one of --n or --preset is required"),
    };
    let seed = seed_override.unwrap_or(args.seed);
    let split: Split = args.split.into();
    let dataset = generate_dataset(n, args.count, seed, split)
        .map_err(|e| anyhow::anyhow!("generation failed: {e}"))?;
    let path = out.unwrap_or_else(|| {
        let stem = args.preset.map(Preset::name).map(str::to_string).unwrap_or(format!("tsp{n}"));
        PathBuf::from(format!("{stem}_{split}_{seed}.tspset"))
    });
    dataset_io::write_dataset(&dataset, &path)?;
    println!("wrote {} instances (n={n}, split={split}, seed={seed}) to {}", args.count, path.display());
    Ok(())
}

fn train(args: TrainArgs, seed_override: Option<u64>, out: Option<PathBuf>, threads: usize) -> Result<()> {
    let mut config = RunConfig::from_file(&args.config)
        .with_context(|| format!("reading config {}", args.config.display()))?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    if let Some(dir) = out {
        config.out_dir = dir;
    }
    let outcome = runner::run_training(&config, threads, args.resume)?;
    println!(
        "run `{}` finished: {} iterations, best fitness {}{}",
        config.tag,
        outcome.iterations_run,
        outcome.best_fitness,
        if outcome.budget_exhausted { " (time budget exhausted)" } else { "" }
    );
    println!("artifacts in {}", outcome.paths.dir.display());
    Ok(())
}

fn dataset_stamp(path: &Path, dataset: &Dataset) -> Result<(String, String, usize, usize)> {
    Ok((
        path.display().to_string(),
        dataset_io::content_hash(path)?,
        dataset.n(),
        dataset.instances.len(),
    ))
}

fn eval(args: EvalArgs, out: Option<PathBuf>, threads: usize) -> Result<()> {
    let ck = Checkpoint::load(&args.checkpoint)
        .with_context(|| format!("loading checkpoint {}", args.checkpoint.display()))?;
    let dataset = dataset_io::read_dataset(&args.dataset)
        .with_context(|| format!("reading dataset {}", args.dataset.display()))?;
    let pool = RayonPool::new(threads);
    let (dataset_path, dataset_sha256, dataset_n, dataset_count) =
        dataset_stamp(&args.dataset, &dataset)?;

    let (kind, mean, std, portfolio) = match args.mode {
        EvalMode::Best => {
            let lengths = decode_lengths(&dataset, &ck.best.params, &ck.net, &pool)?;
            let (mean, std) = report::mean_std(&lengths);
            ("eval-best".to_string(), mean, std, None)
        }
        EvalMode::Portfolio => {
            let portfolio = Portfolio::from_population(&ck.population, ck.net)
                .map_err(|e| anyhow::anyhow!("building portfolio: {e}"))?;
            let pr = evaluate_portfolio(&portfolio, &dataset.instances, &pool)
                .map_err(|e| anyhow::anyhow!("portfolio evaluation: {e}"))?;
            let lengths: Vec<f64> = pr.per_instance.iter().map(|r| r.length).collect();
            let (mean, std) = report::mean_std(&lengths);
            ("eval-portfolio".to_string(), mean, std, Some(PortfolioSection::from_report(&pr)))
        }
    };

    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind,
        dataset_path,
        dataset_sha256,
        dataset_n,
        dataset_count,
        train_n: Some(ck.train_n),
        mean_length: mean,
        std_length: std,
        portfolio,
    };
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{}.json", report.kind)));
    report.save(&path)?;
    println!("{}: mean {} +/- {} over {} instances -> {}", report.kind, mean, std, dataset_count, path.display());
    Ok(())
}

/// Greedy tour lengths of one policy across a dataset, fanned out per
/// instance.
fn decode_lengths(
    dataset: &Dataset,
    params: &ptrnet_ea_core::ptrnet::ParamVector,
    net: &ptrnet_ea_core::ptrnet::NetworkConfig,
    pool: &RayonPool,
) -> Result<Vec<f64>> {
    let instances = &dataset.instances;
    let results: Vec<Result<f64, String>> = pool.run(instances.len(), |i| {
        let slice = core::slice::from_ref(&instances[i]);
        let tours = batch_decode(slice, params, net).map_err(|e| e.to_string())?;
        tour_length(&instances[i], &tours[0]).map_err(|e| e.to_string())
    });
    let mut lengths = Vec::with_capacity(results.len());
    for r in results {
        lengths.push(r.map_err(|e| anyhow::anyhow!("decode failed: {e}"))?);
    }
    Ok(lengths)
}

fn baseline(args: BaselineArgs, out: Option<PathBuf>, threads: usize) -> Result<()> {
    let dataset = dataset_io::read_dataset(&args.dataset)
        .with_context(|| format!("reading dataset {}", args.dataset.display()))?;
    if args.method == BaselineMethod::Oracle && dataset.n() > tsp::BRUTE_FORCE_MAX_N {
        bail!(
            "oracle refuses n={} (limit {}); use nn or two-opt",
            dataset.n(),
            tsp::BRUTE_FORCE_MAX_N
        );
    }
    let pool = RayonPool::new(threads);
    let instances = &dataset.instances;
    let method = args.method;
    let max_passes = args.max_passes;
    let results: Vec<Result<f64, String>> = pool.run(instances.len(), |i| {
        let inst = &instances[i];
        let tour = match method {
            BaselineMethod::Nn => nearest_neighbor_tour(inst, 0).map_err(|e| e.to_string())?,
            BaselineMethod::TwoOpt => {
                let start = nearest_neighbor_tour(inst, 0).map_err(|e| e.to_string())?;
                two_opt(inst, &start, max_passes).map_err(|e| e.to_string())?
            }
            BaselineMethod::Oracle => brute_force_optimal(inst).map_err(|e| e.to_string())?,
        };
        tour_length(inst, &tour).map_err(|e| e.to_string())
    });
    let mut lengths = Vec::with_capacity(results.len());
    for r in results {
        lengths.push(r.map_err(|e| anyhow::anyhow!("baseline failed: {e}"))?);
    }
    let (mean, std) = report::mean_std(&lengths);
    let (dataset_path, dataset_sha256, dataset_n, dataset_count) =
        dataset_stamp(&args.dataset, &dataset)?;
    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: method.kind().to_string(),
        dataset_path,
        dataset_sha256,
        dataset_n,
        dataset_count,
        train_n: None,
        mean_length: mean,
        std_length: std,
        portfolio: None,
    };
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{}.json", report.kind)));
    report.save(&path)?;
    println!("{}: mean {} +/- {} over {} instances -> {}", report.kind, mean, std, dataset_count, path.display());
    Ok(())
}

fn report_cmd(args: ReportArgs, out: Option<PathBuf>) -> Result<()> {
    let consolidated = report::consolidate_runs(&args.run_dirs)?;
    let out_dir = out.unwrap_or_else(|| PathBuf::from("report"));
    let (table, curves) = report::write_run_report(&consolidated, &out_dir)?;
    println!("wrote {} and {}", table.display(), curves.display());
    Ok(())
}
