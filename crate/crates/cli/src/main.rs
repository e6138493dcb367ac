use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use backsample_cli::{cmd_oracle_check, cmd_sample, ExperimentConfig, Overrides};

/// Experiment runner for constrained sampling from table-backed token models.
#[derive(Parser, Debug)]
#[command(name = "backsample", version)]
struct Args {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,

    /// Sampling seed override.
    #[arg(long)]
    seed: Option<u64>,

    /// Samples per strategy and problem.
    #[arg(long)]
    samples: Option<u64>,

    /// Strategy to run; repeat for several.
    #[arg(long, value_parser = ["unconstrained", "constrained", "asap", "backtrack"])]
    strategy: Vec<String>,

    /// Lazy validity-scan threshold in (0, 1]; 1 checks every token.
    #[arg(long)]
    top_p: Option<f64>,

    /// Backtracking distance limit; 0 means unbounded.
    #[arg(long)]
    max_backtrack: Option<usize>,

    /// Keep validity estimates shared across samples.
    #[arg(long)]
    share_q: bool,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Verify the sampler against exhaustive enumeration instead of running
    /// the sampling experiment.
    #[arg(long)]
    oracle: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut cfg = match &args.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(cfg) => cfg,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => ExperimentConfig::default(),
    };
    let overrides = Overrides {
        seed: args.seed,
        samples: args.samples,
        strategies: args.strategy.clone(),
        top_p: args.top_p,
        max_backtrack: args.max_backtrack,
        share_q: if args.share_q { Some(true) } else { None },
        out: args.out.clone(),
    };
    if let Err(e) = cfg.apply(&overrides) {
        eprintln!("{e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let result = if args.oracle {
        cmd_oracle_check(&cfg)
    } else {
        cmd_sample(&cfg)
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
