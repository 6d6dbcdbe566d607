//! Experiment driver: single runs, multi-seed sweeps, curve plots and the
//! oracle self-check.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use xof::config::{ExperimentConfig, Variant};
use xof::experiment::{run_experiment, sweep, write_run_artifacts, write_sweep, RunSpec};
use xof::oracle;
use xof::problems::Problem;
use xof::report;

#[derive(Parser)]
#[command(
    name = "xof",
    about = "XCS with code-fragment conditions on Boolean benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded experiment and write its CSV and dumps.
    Run(RunArgs),
    /// Run a range of seeds and write per-seed CSVs plus the aggregate.
    Sweep(SweepArgs),
    /// Plot learning curves from metric CSVs into one SVG.
    Plot(PlotArgs),
    /// Run the brute-force equivalence suites and print pass/fail counts.
    OracleCheck,
}

#[derive(Args)]
struct CommonRunArgs {
    /// Problem name: parity-<n>, mux-<k>, hmux18 or hmaj18.
    #[arg(long)]
    problem: String,
    /// Variant: bf, scff, gcff or gcff-ncf.
    #[arg(long)]
    variant: String,
    /// Total trials (explore and exploit both count).
    #[arg(long)]
    trials: u64,
    /// Micro-population capacity N.
    #[arg(long)]
    pop: u32,
    /// Optional flat key=value config file applied over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Random seed.
    #[arg(long)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Inclusive seed range, e.g. `0..4` for five seeds.
    #[arg(long)]
    seeds: String,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory of metric CSVs; aggregate_*.csv are preferred when present.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Plot(args) => plot(args),
        Command::OracleCheck => oracle_check(),
    }
}

fn build_spec(common: &CommonRunArgs, seed: u64) -> Result<RunSpec> {
    let problem = Problem::parse(&common.problem)?;
    let mut config = ExperimentConfig::default();
    if let Some(path) = &common.config {
        config
            .apply_file(path)
            .with_context(|| format!("config file {}", path.display()))?;
    }
    config.variant = Variant::parse(&common.variant)?;
    config.pop_size = common.pop;
    config.validate()?;
    if common.trials == 0 {
        bail!("--trials must be positive");
    }
    Ok(RunSpec {
        problem,
        config,
        seed,
        trials: common.trials,
    })
}

fn run(args: RunArgs) -> Result<()> {
    let spec = build_spec(&args.common, args.seed)?;
    let artifacts = run_experiment(&spec)?;
    let csv = write_run_artifacts(&args.common.out, &spec, &artifacts)?;
    let generality = artifacts
        .final_generality
        .map(|g| format!("{g:.6}"))
        .unwrap_or_else(|| "-".to_string());
    println!(
        "{}: final_accuracy={:.6} final_generality_rate={generality} stuck={}",
        csv.display(),
        artifacts.final_accuracy,
        artifacts.stuck
    );
    Ok(())
}

fn parse_seed_range(text: &str) -> Result<Vec<u64>> {
    let (lo, hi) = text
        .split_once("..")
        .with_context(|| format!("seed range `{text}` is not of the form k..m"))?;
    let lo: u64 = lo.trim().parse().context("bad range start")?;
    let hi: u64 = hi.trim().parse().context("bad range end")?;
    if hi < lo {
        bail!("seed range `{text}` is empty");
    }
    Ok((lo..=hi).collect())
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let seeds = parse_seed_range(&args.seeds)?;
    let base = build_spec(&args.common, seeds[0])?;
    let result = sweep(&base, &seeds)?;
    let paths = write_sweep(&args.common.out, &base, &result)?;
    for path in &paths {
        println!("wrote {}", path.display());
    }
    print!("{}", result.summary(&base));
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let mut all: Vec<PathBuf> = std::fs::read_dir(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
        .collect();
    all.sort();
    let aggregates: Vec<PathBuf> = all
        .iter()
        .filter(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().starts_with("aggregate_"))
                .unwrap_or(false)
        })
        .cloned()
        .collect();
    let chosen = if aggregates.is_empty() { all } else { aggregates };
    if chosen.is_empty() {
        bail!("no CSV files under {}", args.input.display());
    }
    let svg = report::plot_files(&chosen)?;
    std::fs::write(&args.out, svg)?;
    println!("wrote {} ({} series)", args.out.display(), chosen.len());
    Ok(())
}

fn oracle_check() -> Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(0x0f0f);
    let report = oracle::oracle_check(&mut rng);
    for line in &report.lines {
        println!("{line}");
    }
    println!("total: {} passed, {} failed", report.passed, report.failed);
    if !report.all_passed() {
        bail!("oracle check failed");
    }
    Ok(())
}
