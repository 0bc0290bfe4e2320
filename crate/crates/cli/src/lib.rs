//! `voe` command line: dataset generation, training, evaluation, flipped
//! reality runs, human study reports and the study server.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 missing artifact.

pub mod commands;
pub mod config;
pub mod error;

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use voe_core::scenario::EventCategory;
use voe_trials::ReportFilters;

pub use commands::{cmd_eval, cmd_flip, cmd_gen, cmd_report, cmd_serve, cmd_train, ServeOptions};
pub use config::{ExperimentConfig, Overrides, Task};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "voe", version, about = "Violation-of-expectation physical reasoning benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a dataset of trial pairs.
    Gen(CommonArgs),
    /// Train models on expected (or, with --flipped, surprising) scenes.
    Train(CommonArgs),
    /// Evaluate trained models on the test split.
    Eval(CommonArgs),
    /// Train and evaluate in flipped reality.
    Flip(CommonArgs),
    /// Human study report from a response log.
    Report(ReportArgs),
    /// Serve the human study API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML experiment config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Task selector: all or A-E.
    #[arg(long)]
    pub category: Option<Task>,
    /// Trials per category.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Dataset directory (default <out>/dataset).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Relative scalar perception noise.
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    /// Run seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Train on surprising scenes and report 1 - H_r.
    #[arg(long)]
    pub flipped: bool,
    /// 625 trials per category split 375/150/100.
    #[arg(long = "paper-scale")]
    pub full_scale: bool,
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            task: self.category,
            trials: self.trials,
            out: self.out.clone(),
            dataset: self.dataset.clone(),
            noise_sigma: self.noise_sigma,
            seeds: self.seeds.clone(),
            reality: self.flipped.then_some(voe_core::experiment::Reality::Flipped),
            full_scale: self.full_scale,
        }
    }

    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::resolve(self.config.as_deref(), &self.overrides())
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Study directory or its events.jsonl.
    pub responses: PathBuf,
    /// Restrict trial statistics to one category (A-E).
    #[arg(long)]
    pub category: Option<Task>,
    /// Keep raters that fail the screens.
    #[arg(long)]
    pub no_exclusions: bool,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

impl ReportArgs {
    pub fn filters(&self) -> Result<ReportFilters, CliError> {
        let category: Option<EventCategory> = match self.category {
            None | Some(Task::All) => None,
            Some(Task::One(c)) => Some(c),
        };
        Ok(ReportFilters { category, exclusions: !self.no_exclusions })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Directory holding the study's event log.
    #[arg(long, default_value = "voe-study")]
    pub study: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Test trials per category (default: the whole test split).
    #[arg(long)]
    pub per_category: Option<usize>,
    /// Seed for session orders.
    #[arg(long, default_value_t = 0)]
    pub study_seed: u64,
}

/// Runs one command and returns what it prints on success.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Gen(a) => Ok(cmd_gen(&a.resolve()?)?.render()),
        Command::Train(a) => Ok(cmd_train(&a.resolve()?)?.render()),
        Command::Eval(a) => Ok(cmd_eval(&a.resolve()?)?.render()),
        Command::Flip(a) => Ok(cmd_flip(&a.resolve()?)?.render()),
        Command::Report(a) => {
            let report = cmd_report(&a.responses, &a.filters()?)?;
            if a.json {
                Ok(serde_json::to_string_pretty(&report).expect("report serializes") + "\n")
            } else {
                Ok(report.render())
            }
        }
        Command::Serve(a) => {
            let cfg = a.common.resolve()?;
            let opts = ServeOptions {
                study_dir: a.study,
                addr: a.addr,
                per_category: a.per_category,
                study_seed: a.study_seed,
            };
            cmd_serve(&cfg, &opts)?;
            Ok(String::new())
        }
    }
}
