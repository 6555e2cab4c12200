use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use rad_core::pipeline::{load_csv, standardize};
use rad_core::{train_pca_baseline, train_with_report, MedianConfig, PcpConfig, ThresholdMode, TrainConfig};

use super::{report_rejected, SchemaArgs};
use crate::config::TrainFile;
use crate::model_file::ModelFile;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training CSV (header row required).
    pub data: PathBuf,
    /// Where to write the model.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Flat TOML file with defaults for any of these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Sparsity weight (default 1/√max(n, d)).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Relative stopping tolerance on ‖M − L − S‖_F / ‖M‖_F.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub mu_max: Option<f64>,
    /// Weiszfeld tolerance, relative to the spread of the projected rows.
    #[arg(long)]
    pub median_tol: Option<f64>,
    #[arg(long)]
    pub median_max_iter: Option<usize>,
    /// Keep singular directions with σ > rank_tol·σ₁.
    #[arg(long)]
    pub rank_tol: Option<f64>,
    /// low_rank_rows or projected_rows.
    #[arg(long)]
    pub threshold_mode: Option<String>,
    /// Robust z-score every column before training; the scaler is stored.
    #[arg(long)]
    pub standardize: bool,
    /// Train the plain-PCA reference model instead.
    #[arg(long)]
    pub baseline: bool,
    /// Write the compact binary encoding.
    #[arg(long)]
    pub binary: bool,
    /// Write the solver's residual history as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// Command-line values layered over the config file.
fn resolve(args: &TrainArgs) -> Result<(TrainFile, bool, bool, bool)> {
    let file = match &args.config {
        Some(p) => TrainFile::load(p)?,
        None => TrainFile::default(),
    };
    let s = &args.schema;
    let merged = TrainFile {
        timestamp_column: s.timestamp_column.clone().or(file.timestamp_column),
        label_column: s.label_column.clone().or(file.label_column),
        features: s.features.clone().or(file.features),
        delimiter: s.delimiter.or(file.delimiter),
        normal_tokens: Some(s.normal_tokens.clone()).filter(|v| !v.is_empty()).or(file.normal_tokens),
        attack_tokens: Some(s.attack_tokens.clone()).filter(|v| !v.is_empty()).or(file.attack_tokens),
        lambda: args.lambda.or(file.lambda),
        tol: args.tol.or(file.tol),
        max_iter: args.max_iter.or(file.max_iter),
        mu0: args.mu0.or(file.mu0),
        rho: args.rho.or(file.rho),
        mu_max: args.mu_max.or(file.mu_max),
        median_tol: args.median_tol.or(file.median_tol),
        median_max_iter: args.median_max_iter.or(file.median_max_iter),
        rank_tol: args.rank_tol.or(file.rank_tol),
        threshold_mode: args.threshold_mode.clone().or(file.threshold_mode),
        standardize: None,
        baseline: None,
        binary: None,
    };
    let standardize = args.standardize || file.standardize.unwrap_or(false);
    let baseline = args.baseline || file.baseline.unwrap_or(false);
    let binary = args.binary || file.binary.unwrap_or(false);
    Ok((merged, standardize, baseline, binary))
}

pub fn run(args: TrainArgs) -> Result<()> {
    let (cfg, standardize_data, baseline, binary) = resolve(&args)?;
    let schema = SchemaArgs {
        timestamp_column: cfg.timestamp_column.clone(),
        label_column: cfg.label_column.clone(),
        features: cfg.features.clone(),
        delimiter: cfg.delimiter,
        normal_tokens: cfg.normal_tokens.clone().unwrap_or_default(),
        attack_tokens: cfg.attack_tokens.clone().unwrap_or_default(),
    }
    .to_schema()?;

    let defaults = TrainConfig::default();
    let pcp_defaults = PcpConfig::default();
    let median_defaults = MedianConfig::default();
    let train_cfg = TrainConfig {
        pcp: PcpConfig {
            lambda: cfg.lambda,
            tol: cfg.tol.unwrap_or(pcp_defaults.tol),
            max_iter: cfg.max_iter.unwrap_or(pcp_defaults.max_iter),
            mu0: cfg.mu0,
            rho: cfg.rho.unwrap_or(pcp_defaults.rho),
            mu_max: cfg.mu_max,
        },
        median: MedianConfig {
            tol: cfg.median_tol.unwrap_or(median_defaults.tol),
            max_iter: cfg.median_max_iter.unwrap_or(median_defaults.max_iter),
            ..median_defaults
        },
        rank_tol: cfg.rank_tol.unwrap_or(defaults.rank_tol),
        threshold_mode: match &cfg.threshold_mode {
            Some(s) => s.parse::<ThresholdMode>()?,
            None => defaults.threshold_mode,
        },
    };
    if baseline && args.trace.is_some() {
        bail!("--trace needs the PCP solver; the baseline does not run it");
    }

    let loaded = load_csv(&args.data, &schema).with_context(|| format!("cannot load {}", args.data.display()))?;
    report_rejected(&loaded.rejected);
    let (dataset, scaler) = if standardize_data {
        let (ds, sc) = standardize(&loaded.dataset)?;
        (ds, Some(sc))
    } else {
        (loaded.dataset, None)
    };

    let (model, pcp) = if baseline {
        (train_pca_baseline(dataset.matrix(), train_cfg.rank_tol)?, None)
    } else {
        let report = train_with_report(dataset.matrix(), &train_cfg)?;
        (report.model, Some(report.pcp))
    };

    if let (Some(path), Some(pcp)) = (&args.trace, &pcp) {
        let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "iteration,residual_frobenius")?;
        for (i, r) in pcp.residual_history.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, r)?;
        }
        w.flush()?;
    }

    let file = ModelFile::new(&model, dataset.column_names().to_vec(), scaler);
    file.save(&args.out, binary)?;

    for w in &model.provenance().warnings {
        eprintln!("warning: {w}");
    }
    println!("r = {}", model.rank());
    println!("theta = {}", model.threshold());
    match &pcp {
        Some(p) => {
            println!("iterations = {}", p.iterations);
            println!("converged = {}", p.converged);
        }
        None => {
            println!("iterations = 0");
            println!("converged = true");
        }
    }
    Ok(())
}
