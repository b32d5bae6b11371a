//! `influx`: train small text classifiers and explain their predictions with
//! saliency maps and influence functions.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;
use serde::Serialize;

mod data;
mod experiment;
mod explain;
mod generate;
mod influence;
mod manifest;
mod report;
mod train;

#[derive(Parser)]
#[command(
    name = "influx",
    version,
    about = "Saliency maps and influence functions for small text classifiers"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Seed for data generation, training and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Directory for reports, checkpoints and manifests.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    /// Influence cache directory [default: <out-dir>/cache]. The
    /// INFLUENCE_CACHE_DIR environment variable takes precedence.
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,

    /// Worker threads [default: available cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Format of record-level reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

impl GlobalOpts {
    pub fn cache_dir(&self) -> PathBuf {
        match std::env::var_os("INFLUENCE_CACHE_DIR") {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self
                .cache_dir
                .clone()
                .unwrap_or_else(|| self.out_dir.join("cache")),
        }
    }
}

#[derive(ValueEnum, Serialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as JSONL.
    Generate(generate::GenerateArgs),
    /// Train a classifier and write a checkpoint.
    Train(train::TrainArgs),
    /// Saliency maps and influence rankings for test examples.
    Explain(explain::ExplainArgs),
    /// Run one of the validation experiments.
    Experiment(experiment::ExperimentArgs),
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring the worker pool")?;
    }
    std::fs::create_dir_all(&cli.global.out_dir)
        .with_context(|| format!("creating {}", cli.global.out_dir.display()))?;
    match &cli.command {
        Command::Generate(a) => generate::run(&cli.global, a),
        Command::Train(a) => train::run(&cli.global, a),
        Command::Explain(a) => explain::run(&cli.global, a),
        Command::Experiment(a) => experiment::run(&cli.global, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // clap exits 2 on usage errors and 0 for --help / --version
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e:#}");
            ExitCode::from(1)
        }
    }
}
