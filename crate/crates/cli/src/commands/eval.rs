use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use rad_core::pipeline::{evaluate, CsvSchema, Label};

use super::delimiter_byte;
use crate::records::read_records;

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Output of `rad score` (CSV or NDJSON) or `rad watch`.
    pub scores: PathBuf,
    /// CSV whose data row k labels the record with row_index k.
    pub labels: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    #[arg(long)]
    pub delimiter: Option<char>,
    #[arg(long = "normal-token")]
    pub normal_tokens: Vec<String>,
    #[arg(long = "attack-token")]
    pub attack_tokens: Vec<String>,
}

fn read_labels(args: &EvalArgs) -> Result<Vec<Label>> {
    let mut schema = CsvSchema::default();
    if !args.normal_tokens.is_empty() {
        schema.normal_tokens = args.normal_tokens.clone();
    }
    if !args.attack_tokens.is_empty() {
        schema.attack_tokens = args.attack_tokens.clone();
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(args.delimiter.map(delimiter_byte).transpose()?.unwrap_or(b','))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(&args.labels)
        .with_context(|| format!("cannot read {}", args.labels.display()))?;
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == args.label_column)
        .with_context(|| format!("labels file has no column `{}`", args.label_column))?;
    let mut labels = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let raw = rec.get(col).unwrap_or_default();
        match schema.parse_label(raw) {
            Some(l) => labels.push(l),
            None => bail!("labels file data row {row}: unrecognized label `{raw}`"),
        }
    }
    Ok(labels)
}

pub fn run(args: EvalArgs) -> Result<()> {
    let file = File::open(&args.scores).with_context(|| format!("cannot read {}", args.scores.display()))?;
    let records = read_records(BufReader::new(file))?;
    let all_labels = read_labels(&args)?;
    let labels = records
        .iter()
        .map(|r| {
            all_labels
                .get(r.row_index)
                .copied()
                .with_context(|| format!("no label for row_index {}", r.row_index))
        })
        .collect::<Result<Vec<_>>>()?;
    let metrics = evaluate(&records, &labels)?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    Ok(())
}
