use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rad_core::pipeline::{inject_corruption, load_csv, write_csv, CorruptionSpec};

use super::{report_rejected, SchemaArgs};

#[derive(Debug, Args)]
pub struct InjectArgs {
    pub data: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Standard deviation of the noise added to every feature value.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Comma-separated columns that receive bursts.
    #[arg(long, value_delimiter = ',')]
    pub burst_columns: Vec<String>,
    #[arg(long, default_value_t = 25)]
    pub burst_period: usize,
    #[arg(long, default_value_t = 1)]
    pub burst_length: usize,
    /// Burst offset, in standard deviations of the column.
    #[arg(long, default_value_t = 10.0)]
    pub burst_magnitude: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(args: InjectArgs) -> Result<()> {
    let schema = args.schema.to_schema()?;
    let loaded = load_csv(&args.data, &schema).with_context(|| format!("cannot load {}", args.data.display()))?;
    report_rejected(&loaded.rejected);
    let spec = CorruptionSpec {
        gaussian_sigma: args.sigma,
        burst_columns: args.burst_columns,
        burst_period: args.burst_period,
        burst_length: args.burst_length,
        burst_magnitude: args.burst_magnitude,
        seed: args.seed,
    };
    let corrupted = inject_corruption(&loaded.dataset, &spec)?;
    let file = File::create(&args.out).with_context(|| format!("cannot write {}", args.out.display()))?;
    write_csv(&corrupted, BufWriter::new(file), &schema)?;
    Ok(())
}
