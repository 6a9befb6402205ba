//! `sphp`: preprocess tracker exports, fit, predict, simulate, synthesize and benchmark.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sphp::ModelKind;

use crate::config::{Overrides, RunConfig, CONFIG_ENV};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "sphp", version, about = "Time-varying semi-parametric Hawkes processes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON config file (a run manifest also works). Flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Model kind to fit.
    #[arg(long, global = true, value_parser = parse_kind)]
    kind: Option<ModelKind>,
    /// L1 weight γ.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// ADMM iterations J.
    #[arg(long, global = true)]
    iters: Option<usize>,
    /// Gradient step δ.
    #[arg(long, global = true)]
    lr: Option<f64>,
    /// ADMM penalty ρ.
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Prediction window, minutes.
    #[arg(long = "window-min", global = true)]
    window_min: Option<f64>,
    /// Simulation trials per prediction.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Thinning grid step Δ, minutes.
    #[arg(long = "delta-min", global = true)]
    delta_min: Option<f64>,
    /// Print debug logs.
    #[arg(long, short, global = true)]
    verbose: bool,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: sphp::Error| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse raw tracker CSVs, screen, deduplicate and split into train/test datasets.
    Preprocess {
        /// Directory of `<participant-id>.csv` files.
        #[arg(long)]
        raw_dir: PathBuf,
        /// JSON profiles keyed by participant id.
        #[arg(long)]
        profiles: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model kind with ADMM.
    Fit {
        /// Training dataset (JSON lines).
        #[arg(long)]
        data: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict expected counts in a window after each sequence's observation start.
    Predict {
        /// Fitted model file.
        #[arg(long)]
        model: PathBuf,
        /// Test dataset; each sequence is conditioned at its observation start.
        #[arg(long)]
        data: PathBuf,
        /// Predictions file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate sequences from a model file or a `{ "params", "basis" }` document.
    Simulate {
        /// Model file or `{ "params", "basis" }` document.
        #[arg(long)]
        model: PathBuf,
        /// Take subjects and features from this dataset; otherwise draw random features.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Horizon in hours.
        #[arg(long, default_value_t = 96.0)]
        horizon: f64,
        /// Number of sequences when no dataset is given.
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Dataset file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic dataset from a ground-truth model.
    Synth {
        /// Ground truth: `{ "params": ..., "basis": ... }` or a model file.
        #[arg(long)]
        truth: PathBuf,
        /// Number of sequences (overrides `synth.sequences`).
        #[arg(long)]
        n: Option<usize>,
        /// Horizon in hours (overrides `synth.horizon`).
        #[arg(long)]
        horizon: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit all kinds on a training set and compare them on a test set.
    Benchmark {
        /// Training dataset.
        #[arg(long)]
        train: PathBuf,
        /// Test dataset.
        #[arg(long)]
        test: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    let mut config = match &g.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    config.apply(&Overrides {
        seed: g.seed,
        kind: g.kind,
        gamma: g.gamma,
        iters: g.iters,
        lr: g.lr,
        rho: g.rho,
        window_min: g.window_min,
        trials: g.trials,
        delta_min: g.delta_min,
    });
    if let Command::Synth { n, horizon, .. } = &cli.command {
        if let Some(n) = n {
            config.synth.sequences = *n;
        }
        if let Some(h) = horizon {
            config.synth.horizon = *h;
        }
    }
    config.validate()?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = g.threads {
        if t == 0 {
            return Err(CliError::Config("threads: must be ≥ 1".into()));
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| CliError::Config(format!("threads: {e}")))?;

    pool.install(|| match &cli.command {
        Command::Preprocess { raw_dir, profiles, out } => commands::preprocess(&config, raw_dir, profiles, out),
        Command::Fit { data, out } => commands::fit(&config, data, out),
        Command::Predict { model, data, out } => commands::predict(&config, model, data, out),
        Command::Simulate { model, data, horizon, n, out } => {
            commands::simulate(&config, model, data.as_deref(), *horizon, *n, out)
        }
        Command::Synth { truth, out, .. } => commands::synth(&config, truth, out),
        Command::Benchmark { train, test, out } => commands::benchmark(&config, train, test, out),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.global.verbose { "debug" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
