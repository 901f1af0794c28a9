//! The `polarlens` pipeline driver: one subcommand per stage, one config file.
//!
//! Exit codes: 0 success, 1 configuration or validation error, 2 partial
//! data failures (logged), 3 runtime error.

pub mod commands;
pub mod config;
pub mod logging;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use polarlens_core::model::Mode;

pub use commands::{
    cmd_annotate, cmd_encode, cmd_eval, cmd_experiment, cmd_harvest, cmd_knowledge, cmd_split, cmd_stats, cmd_train,
    Outcome,
};
pub use config::{PipelineConfig, CONFIG_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{stage}: {message}")]
    Runtime { stage: String, message: String },
}

impl CliError {
    pub fn runtime(stage: impl Into<String>, err: impl std::fmt::Display) -> Self {
        CliError::Runtime { stage: stage.into(), message: err.to_string() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Harvest,
    Split,
    Stats,
    Knowledge,
    Encode,
    Train,
    Eval,
    Experiment,
    Annotate,
}

#[derive(Debug, Parser)]
#[command(name = "polarlens", version, about = "Multilingual headline polarity pipeline")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training mode for `train` and `eval`.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Validate configuration and inputs, write nothing.
    #[arg(long)]
    pub dry_run: bool,
}

/// Flag overrides shared by every subcommand.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub dry_run: bool,
}

impl RunOptions {
    pub fn seed(&self, cfg: &PipelineConfig) -> u64 {
        self.seed.unwrap_or(cfg.seed)
    }

    pub fn mode(&self, cfg: &PipelineConfig) -> Mode {
        self.mode.unwrap_or(cfg.train.mode)
    }
}

pub fn execute(command: Command, cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    match command {
        Command::Harvest => cmd_harvest(cfg, opts),
        Command::Split => cmd_split(cfg, opts),
        Command::Stats => cmd_stats(cfg, opts).map(|_| Outcome::default()),
        Command::Knowledge => cmd_knowledge(cfg, opts),
        Command::Encode => cmd_encode(cfg, opts),
        Command::Train => cmd_train(cfg, opts).map(|_| Outcome::default()),
        Command::Eval => cmd_eval(cfg, opts).map(|_| Outcome::default()),
        Command::Experiment => cmd_experiment(cfg, opts).map(|_| Outcome::default()),
        Command::Annotate => cmd_annotate(cfg, opts),
    }
}

/// Loads the config, runs the subcommand and maps the result to an exit code.
pub fn run(cli: &Cli) -> u8 {
    let opts = RunOptions { seed: cli.seed, mode: cli.mode, dry_run: cli.dry_run };
    let result = PipelineConfig::load(&cli.config).and_then(|cfg| execute(cli.command, &cfg, &opts));
    match result {
        Ok(outcome) if outcome.failures.is_empty() => 0,
        Ok(outcome) => {
            log::warn!("{} item(s) failed; see earlier errors", outcome.failures.len());
            2
        }
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}
