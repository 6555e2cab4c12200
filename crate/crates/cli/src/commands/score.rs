use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use rad_core::pipeline::{load_csv, CsvSchema};

use super::{delimiter_byte, report_rejected};
use crate::model_file::ModelFile;
use crate::records::{write_csv_row, write_ndjson, Format, CSV_HEADER};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub model: PathBuf,
    /// CSV with a header naming the model's feature columns; other columns
    /// are ignored.
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Write records here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn run(args: ScoreArgs) -> Result<()> {
    let deployed = ModelFile::load(&args.model)?.deploy()?;
    let mut schema = CsvSchema {
        feature_columns: Some(deployed.feature_names.clone()),
        ..CsvSchema::default()
    };
    if let Some(c) = args.delimiter {
        schema.delimiter = delimiter_byte(c)?;
    }
    let loaded = load_csv(&args.data, &schema).with_context(|| format!("cannot load {}", args.data.display()))?;
    report_rejected(&loaded.rejected);

    let matrix = match &deployed.scaler {
        Some(s) => s.apply(loaded.dataset.matrix())?,
        None => loaded.dataset.matrix().clone(),
    };
    let mut records = deployed.model.score_batch(&matrix)?;
    for (rec, &row) in records.iter_mut().zip(&loaded.row_indices) {
        rec.row_index = row;
    }

    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    if args.format == Format::Csv {
        writeln!(out, "{CSV_HEADER}")?;
    }
    for rec in &records {
        match args.format {
            Format::Csv => write_csv_row(&mut out, rec)?,
            Format::Ndjson => write_ndjson(&mut out, rec, None)?,
        }
    }
    out.flush()?;
    Ok(())
}
