//! Command-line entry point wiring data generation, training, evaluation,
//! sweeps, analysis reports, and heatmap export.
//!
//! Exit codes: 0 success, 1 an asserted analysis property failed, 2 usage,
//! configuration or I/O error, 3 training divergence.

mod commands;
mod config;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn violation(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<keat_core::graph::GraphError> for CliError {
    fn from(e: keat_core::graph::GraphError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<keat_core::harness::HarnessError> for CliError {
    fn from(e: keat_core::harness::HarnessError) -> Self {
        match e {
            keat_core::harness::HarnessError::Diverged { .. } => CliError {
                code: 3,
                message: e.to_string(),
            },
            other => CliError::usage(other.to_string()),
        }
    }
}

impl From<keat_core::numeric::NumericError> for CliError {
    fn from(e: keat_core::numeric::NumericError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<keat_core::analysis::AnalysisError> for CliError {
    fn from(e: keat_core::analysis::AnalysisError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(format!("io error: {e}"))
    }
}

/// Resolve the effective seed: flag, then KEAT_SEED, then 1.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    Ok(seed_from_env(flag)?.unwrap_or(1))
}

/// Flag or KEAT_SEED, without applying the final default (lets a config
/// file's `seed=` line take effect when neither is present).
pub fn seed_from_env(flag: Option<u64>) -> Result<Option<u64>, CliError> {
    if let Some(seed) = flag {
        return Ok(Some(seed));
    }
    match std::env::var("KEAT_SEED") {
        Ok(raw) => raw
            .parse::<u64>()
            .map(Some)
            .map_err(|e| CliError::usage(format!("KEAT_SEED: {e} (got `{raw}`)"))),
        Err(_) => Ok(None),
    }
}

pub fn config_help() -> String {
    config::config_keys_help()
}

#[derive(Parser)]
#[command(
    name = "keat",
    version,
    about = "Kernel-modulated temporal attention: data, training, analysis",
    propagate_version = true
)]
struct Cli {
    /// Cap worker threads for sweep cells (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic recency-driven event CSV
    GenData(commands::GenDataArgs),
    /// Train a link-prediction model and write a checkpoint
    Train(commands::TrainArgs),
    /// Evaluate a checkpoint on the validation or test split
    Eval(commands::EvalArgs),
    /// Numerical verification reports (exit 1 on property violation)
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Attention-vs-elapsed-time table for a probe neighbor
    Heatmap(commands::HeatmapArgs),
    /// Kernel width sweep in multiples of the train sigma
    SweepSigma(commands::SweepArgs),
    /// Modulation-target ablation (neither/node/edge/both)
    Ablate(commands::AblateArgs),
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Kernel-to-base moment ratios R_n with Monte-Carlo standard errors
    Moments(commands::MomentsArgs),
    /// Variance gap of modulated vs plain logits, single-edge and averaged
    Variance(commands::VarianceArgs),
    /// Kernel-times-cosine product series coefficients and direct check
    Series(commands::SeriesArgs),
    /// Per-node spectral entropy and inter-arrival histogram of a dataset
    Spectral(commands::SpectralArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build_global();
    }
    let result = match cli.command {
        Command::GenData(args) => commands::gen_data(args),
        Command::Train(args) => commands::train(args),
        Command::Eval(args) => commands::eval(args),
        Command::Analyze(AnalyzeCommand::Moments(args)) => commands::analyze_moments(args),
        Command::Analyze(AnalyzeCommand::Variance(args)) => commands::analyze_variance(args),
        Command::Analyze(AnalyzeCommand::Series(args)) => commands::analyze_series(args),
        Command::Analyze(AnalyzeCommand::Spectral(args)) => commands::analyze_spectral(args),
        Command::Heatmap(args) => commands::heatmap(args),
        Command::SweepSigma(args) => commands::sweep_sigma(args),
        Command::Ablate(args) => commands::ablate(args),
    };
    if let Err(e) = result {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
}
