use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use rad_core::pipeline::{CsvSchema, RejectedRow};
use rad_core::RadError;

pub mod eval;
pub mod inject;
pub mod inspect;
pub mod score;
pub mod train;
pub mod watch;

#[derive(Debug, Parser)]
#[command(name = "rad", version, about = "Robust low-rank anomaly detection for multivariate sensor data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model from a CSV file and write it to disk.
    Train(train::TrainArgs),
    /// Score every row of a CSV file.
    Score(score::ScoreArgs),
    /// Score rows as they arrive on stdin or at the end of a growing file.
    Watch(watch::WatchArgs),
    /// Add Gaussian noise and periodic bursts to a CSV file.
    Inject(inject::InjectArgs),
    /// Compare scored verdicts with labels.
    Eval(eval::EvalArgs),
    /// Print a model's shape, threshold and storage footprint.
    Inspect(inspect::InspectArgs),
}

/// CSV layout flags shared by commands that read datasets.
#[derive(Debug, Clone, Default, Args)]
pub struct SchemaArgs {
    /// Column holding opaque timestamps.
    #[arg(long)]
    pub timestamp_column: Option<String>,
    /// Column holding NORMAL/ATTACK labels; never used for training.
    #[arg(long)]
    pub label_column: Option<String>,
    /// Comma-separated feature columns (default: every other column).
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    /// Field delimiter.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Label value meaning NORMAL (repeatable).
    #[arg(long = "normal-token")]
    pub normal_tokens: Vec<String>,
    /// Label value meaning ATTACK (repeatable).
    #[arg(long = "attack-token")]
    pub attack_tokens: Vec<String>,
}

impl SchemaArgs {
    pub fn to_schema(&self) -> Result<CsvSchema> {
        let mut schema = CsvSchema {
            timestamp_column: self.timestamp_column.clone(),
            label_column: self.label_column.clone(),
            feature_columns: self.features.clone(),
            ..CsvSchema::default()
        };
        if let Some(c) = self.delimiter {
            schema.delimiter = delimiter_byte(c)?;
        }
        if !self.normal_tokens.is_empty() {
            schema.normal_tokens = self.normal_tokens.clone();
        }
        if !self.attack_tokens.is_empty() {
            schema.attack_tokens = self.attack_tokens.clone();
        }
        Ok(schema)
    }
}

pub fn delimiter_byte(c: char) -> Result<u8> {
    if !c.is_ascii() {
        bail!("delimiter must be a single ASCII character, got `{c}`");
    }
    Ok(c as u8)
}

pub fn report_rejected(rejected: &[RejectedRow]) {
    for r in rejected {
        eprintln!("warning: skipped data row {} (line {}): {}", r.row, r.line, r.reason);
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => train::run(a),
        Command::Score(a) => score::run(a),
        Command::Watch(a) => watch::run(a),
        Command::Inject(a) => inject::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Inspect(a) => inspect::run(a),
    }
}

/// 2 for internal failures (numerical breakdown), 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let internal = err
        .chain()
        .any(|c| c.downcast_ref::<RadError>().is_some_and(RadError::is_internal));
    if internal {
        2
    } else {
        1
    }
}

pub(crate) fn path_arg(p: &str) -> Option<PathBuf> {
    (p != "-").then(|| PathBuf::from(p))
}
