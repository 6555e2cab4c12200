//! Text encodings of score records: CSV and NDJSON.
//!
//! A normalized score is `+∞` when θ = 0 and the score is positive. JSON has
//! no infinity, so it is written as the string `"inf"` in both encodings.

use std::io::{self, BufRead, Write};

use anyhow::{bail, Context, Result};
use rad_core::{ScoreRecord, Verdict};
use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Ndjson,
}

pub const CSV_HEADER: &str = "row_index,score,normalized,verdict,residual_norm";

#[derive(Serialize)]
struct JsonRecord {
    row_index: usize,
    score: f64,
    #[serde(serialize_with = "real_or_inf")]
    normalized: f64,
    verdict: Verdict,
    residual_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    latency_us: Option<f64>,
}

fn real_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn write_ndjson<W: Write>(out: &mut W, rec: &ScoreRecord, latency_us: Option<f64>) -> io::Result<()> {
    let json = JsonRecord {
        row_index: rec.row_index,
        score: rec.score,
        normalized: rec.normalized,
        verdict: rec.verdict,
        residual_norm: rec.residual_norm,
        latency_us,
    };
    serde_json::to_writer(&mut *out, &json)?;
    out.write_all(b"\n")
}

pub fn write_error_ndjson<W: Write>(out: &mut W, row_index: usize, message: &str) -> io::Result<()> {
    serde_json::to_writer(&mut *out, &serde_json::json!({ "row_index": row_index, "error": message }))?;
    out.write_all(b"\n")
}

pub fn write_csv_row<W: Write>(out: &mut W, rec: &ScoreRecord) -> io::Result<()> {
    let normalized = if rec.normalized.is_infinite() { "inf".to_owned() } else { rec.normalized.to_string() };
    writeln!(
        out,
        "{},{},{},{},{}",
        rec.row_index, rec.score, normalized, rec.verdict, rec.residual_norm
    )
}

/// Reads records written by [`write_csv_row`] (with header) or
/// [`write_ndjson`], detecting the encoding from the first byte. Error
/// records are skipped.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<ScoreRecord>> {
    let mut lines = reader.lines().enumerate().peekable();
    let mut out = Vec::new();
    let first = loop {
        match lines.peek() {
            Some((_, Ok(l))) if l.trim().is_empty() => {
                lines.next();
            }
            Some((_, Ok(l))) => break l.trim_start().starts_with('{'),
            Some((_, Err(_))) => {
                let (_, e) = lines.next().unwrap();
                return Err(e.unwrap_err()).context("cannot read scores");
            }
            None => return Ok(out),
        }
    };
    let json = first;
    if !json {
        let (_, header) = lines.next().unwrap();
        if header?.trim() != CSV_HEADER {
            bail!("scores file: expected header `{CSV_HEADER}`");
        }
    }
    for (i, line) in lines {
        let line = line.context("cannot read scores")?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = if json { parse_json(&line) } else { parse_csv(&line) };
        match parsed.with_context(|| format!("scores file line {}", i + 1))? {
            Some(r) => out.push(r),
            None => continue,
        }
    }
    Ok(out)
}

fn parse_real(s: &str) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        _ => s.parse().with_context(|| format!("bad number `{s}`")),
    }
}

fn parse_verdict(s: &str) -> Result<Verdict> {
    match s {
        "NORMAL" => Ok(Verdict::Normal),
        "ANOMALY" => Ok(Verdict::Anomaly),
        _ => bail!("bad verdict `{s}`"),
    }
}

fn parse_csv(line: &str) -> Result<Option<ScoreRecord>> {
    let f: Vec<&str> = line.split(',').map(str::trim).collect();
    if f.len() != 5 {
        bail!("expected 5 fields, got {}", f.len());
    }
    Ok(Some(ScoreRecord {
        row_index: f[0].parse().with_context(|| format!("bad row index `{}`", f[0]))?,
        score: parse_real(f[1])?,
        normalized: parse_real(f[2])?,
        verdict: parse_verdict(f[3])?,
        residual_norm: parse_real(f[4])?,
    }))
}

fn parse_json(line: &str) -> Result<Option<ScoreRecord>> {
    let v: serde_json::Value = serde_json::from_str(line)?;
    if v.get("error").is_some() {
        return Ok(None);
    }
    let real = |key: &str| -> Result<f64> {
        match v.get(key) {
            Some(serde_json::Value::Number(n)) => n.as_f64().context("bad number"),
            Some(serde_json::Value::String(s)) => parse_real(s),
            _ => bail!("missing field `{key}`"),
        }
    };
    Ok(Some(ScoreRecord {
        row_index: v.get("row_index").and_then(|x| x.as_u64()).context("missing field `row_index`")? as usize,
        score: real("score")?,
        normalized: real("normalized")?,
        verdict: parse_verdict(v.get("verdict").and_then(|x| x.as_str()).context("missing field `verdict`")?)?,
        residual_norm: real("residual_norm")?,
    }))
}
