use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use tailgate::config::{parse_config_as, Kind};
use tailgate::experiment::{execute, summarize};
use tailgate::Rayon;

#[derive(Parser)]
#[command(name = "tailgate", version, about = "Heavy-tail diagnostics for ReLU-gate training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hill estimates on SαS samples with known index.
    ValidateEstimator(Common),
    /// Tail index of realizable ensembles along one axis.
    RealizableSweep(Common),
    /// Tail index of classification ensembles along one axis.
    ClassificationSweep(Common),
    /// One training run with its error traces.
    SingleRun(Common),
    /// KS check of strict stability of the sampler.
    StabilityCheck(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment file.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shrink the run to CI size.
    #[arg(long)]
    ci_scale: bool,
}

impl Command {
    fn split(self) -> (Kind, Common) {
        match self {
            Command::ValidateEstimator(c) => (Kind::ValidateEstimator, c),
            Command::RealizableSweep(c) => (Kind::RealizableSweep, c),
            Command::ClassificationSweep(c) => (Kind::ClassificationSweep, c),
            Command::SingleRun(c) => (Kind::SingleRun, c),
            Command::StabilityCheck(c) => (Kind::StabilityCheck, c),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (kind, args) = cli.command.split();
    let mut spec = parse_config_as(&args.config, Some(kind))
        .with_context(|| format!("reading {}", args.config.display()))?;
    if spec.kind != kind {
        bail!(
            "{}: config is a {} experiment, not {}",
            args.config.display(),
            spec.kind.as_str(),
            kind.as_str()
        );
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(out) = args.out {
        spec.out = out;
    }
    if args.ci_scale {
        spec.apply_ci_scale();
    }
    let exec = Rayon::from_env();
    let report = execute(&spec, &exec)?;
    for line in summarize(&report) {
        println!("{line}");
    }
    println!("wrote {}", spec.out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
