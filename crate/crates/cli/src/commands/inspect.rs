use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use crate::model_file::{is_binary, ModelFile};

#[derive(Debug, Args)]
pub struct InspectArgs {
    pub model: PathBuf,
    /// Also count the runtime buffers for x and Aᵀx in the footprint.
    #[arg(long)]
    pub with_buffers: bool,
    /// Bytes per stored scalar in the footprint.
    #[arg(long, default_value_t = 8)]
    pub scalar_bytes: usize,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub encoding: &'static str,
    pub d: usize,
    pub r: usize,
    pub threshold: f64,
    pub threshold_mode: String,
    /// `d·r + d + 1`: basis, median, threshold.
    pub parameter_count: usize,
    /// Scalars counted in the footprint.
    pub footprint_values: usize,
    pub scalar_bytes: usize,
    pub footprint_bytes: usize,
    pub file_bytes: usize,
    pub n_rows: usize,
    pub baseline: bool,
    pub standardized: bool,
    pub warnings: Vec<String>,
}

pub fn summarize(bytes: &[u8], with_buffers: bool, scalar_bytes: usize) -> Result<Summary> {
    let file = ModelFile::from_bytes(bytes)?;
    let deployed = file.deploy()?;
    let model = &deployed.model;
    let (d, r) = (model.dim(), model.rank());
    let parameter_count = model.parameter_count();
    let footprint_values = parameter_count + if with_buffers { d + r } else { 0 };
    Ok(Summary {
        encoding: if is_binary(bytes) { "binary" } else { "json" },
        d,
        r,
        threshold: model.threshold(),
        threshold_mode: model.threshold_mode().to_string(),
        parameter_count,
        footprint_values,
        scalar_bytes,
        footprint_bytes: footprint_values * scalar_bytes,
        file_bytes: bytes.len(),
        n_rows: model.provenance().n_rows,
        baseline: model.provenance().baseline,
        standardized: deployed.scaler.is_some(),
        warnings: model.provenance().warnings.clone(),
    })
}

pub fn run(args: InspectArgs) -> Result<()> {
    if args.scalar_bytes == 0 {
        bail!("--scalar-bytes must be positive");
    }
    let bytes = std::fs::read(&args.model).with_context(|| format!("cannot read model {}", args.model.display()))?;
    let s = summarize(&bytes, args.with_buffers, args.scalar_bytes)
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&s)?);
        return Ok(());
    }
    println!("encoding         {}", s.encoding);
    println!("d                {}", s.d);
    println!("r                {}", s.r);
    println!("threshold        {}", s.threshold);
    println!("threshold_mode   {}", s.threshold_mode);
    println!("parameter_count  {}", s.parameter_count);
    println!("footprint_values {}", s.footprint_values);
    println!("footprint_bytes  {}", s.footprint_bytes);
    println!("file_bytes       {}", s.file_bytes);
    println!("trained_rows     {}", s.n_rows);
    println!("baseline         {}", s.baseline);
    println!("standardized     {}", s.standardized);
    for w in &s.warnings {
        println!("warning          {w}");
    }
    Ok(())
}
