use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{anyhow, Context, Result};
use clap::Args;
use rad_core::model::ScoreScratch;

use super::{delimiter_byte, path_arg};
use crate::model_file::{Deployed, ModelFile};
use crate::records::{write_error_ndjson, write_ndjson};

#[derive(Debug, Args)]
pub struct WatchArgs {
    pub model: PathBuf,
    /// File to follow, or `-` for stdin.
    #[arg(long, default_value = "-")]
    pub input: String,
    /// How long to wait at end of file before checking for new rows.
    #[arg(long, default_value_t = 100)]
    pub poll_ms: u64,
    /// Stop at end of file instead of waiting for more rows.
    #[arg(long)]
    pub no_follow: bool,
    #[arg(long)]
    pub delimiter: Option<char>,
}

#[derive(Debug, Clone, Copy)]
pub struct StreamOptions {
    pub delimiter: u8,
    /// Keep polling at end of input with this interval; `None` stops there.
    pub follow: Option<Duration>,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct StreamStats {
    pub scored: usize,
    pub errors: usize,
}

enum Columns {
    /// First non-blank line not seen yet.
    Pending,
    /// No header: fields are the model features, in order.
    Positional,
    /// Header seen: field position of each model feature, and field count.
    Mapped(Vec<usize>, usize),
}

/// Line-at-a-time scorer. The first non-blank line is taken as a header if
/// any of its fields names a model feature.
pub struct LineScorer<'a> {
    deployed: &'a Deployed,
    delimiter: u8,
    columns: Columns,
    next_row: usize,
    scratch: ScoreScratch,
    values: Vec<f64>,
    stats: StreamStats,
}

impl<'a> LineScorer<'a> {
    pub fn new(deployed: &'a Deployed, delimiter: u8) -> Self {
        Self {
            deployed,
            delimiter,
            columns: Columns::Pending,
            next_row: 0,
            scratch: deployed.model.scratch(),
            values: Vec::with_capacity(deployed.model.dim()),
            stats: StreamStats::default(),
        }
    }

    pub fn stats(&self) -> StreamStats {
        self.stats
    }

    /// Scores one line, writing a verdict or an error record. Fails only
    /// on a header that lacks a model feature, or on output errors.
    pub fn line<W: Write>(&mut self, line: &[u8], out: &mut W) -> Result<()> {
        let start = Instant::now();
        let line = line.trim_ascii();
        if line.is_empty() {
            return Ok(());
        }
        if let Columns::Pending = self.columns {
            let text = String::from_utf8_lossy(line);
            let fields: Vec<&str> = text.split(self.delimiter as char).map(|f| clean_str(f)).collect();
            let names = &self.deployed.feature_names;
            if fields.iter().any(|f| names.iter().any(|n| n == f)) {
                let idx = names
                    .iter()
                    .map(|n| {
                        fields
                            .iter()
                            .position(|f| f == n)
                            .ok_or_else(|| anyhow!("input header lacks column `{n}`"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.columns = Columns::Mapped(idx, fields.len());
                return Ok(());
            }
            self.columns = Columns::Positional;
        }

        let row = self.next_row;
        self.next_row += 1;
        match self.parse(line) {
            Ok(()) => {
                self.deployed.prepare(&mut self.values);
                let rec = self.deployed.model.classify_with(row, &self.values, &mut self.scratch);
                let latency_us = start.elapsed().as_secs_f64() * 1e6;
                write_ndjson(out, &rec, Some(latency_us))?;
                self.stats.scored += 1;
            }
            Err(msg) => {
                write_error_ndjson(out, row, &msg)?;
                self.stats.errors += 1;
            }
        }
        Ok(())
    }

    fn parse(&mut self, line: &[u8]) -> std::result::Result<(), String> {
        let d = self.deployed.model.dim();
        let delimiter = self.delimiter;
        self.values.clear();
        let fields = line.split(|b| *b == delimiter).map(clean);
        match &self.columns {
            Columns::Mapped(idx, width) => {
                let fields: Vec<&[u8]> = fields.collect();
                if fields.len() != *width {
                    return Err(format!("expected {width} fields, got {}", fields.len()));
                }
                for (&i, name) in idx.iter().zip(&self.deployed.feature_names) {
                    self.values.push(number(fields[i], name)?);
                }
            }
            _ => {
                for (k, f) in fields.enumerate() {
                    if k >= d {
                        return Err(format!("expected {d} fields, got more"));
                    }
                    self.values.push(number(f, &self.deployed.feature_names[k])?);
                }
                if self.values.len() != d {
                    return Err(format!("expected {d} fields, got {}", self.values.len()));
                }
            }
        }
        Ok(())
    }
}

fn clean(field: &[u8]) -> &[u8] {
    let f = field.trim_ascii();
    f.strip_prefix(b"\"")
        .and_then(|s| s.strip_suffix(b"\""))
        .unwrap_or(f)
}

fn clean_str(field: &str) -> &str {
    let f = field.trim();
    f.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(f)
}

fn number(raw: &[u8], name: &str) -> std::result::Result<f64, String> {
    match fast_float2::parse::<f64, _>(raw) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(format!("column `{name}`: non-finite value `{}`", String::from_utf8_lossy(raw))),
        Err(_) => Err(format!(
            "column `{name}`: cannot parse `{}` as a number",
            String::from_utf8_lossy(raw)
        )),
    }
}

/// Scores lines from `input` until it ends (or forever when following).
/// Output is flushed whenever no further input is buffered, so a record
/// appears as soon as its row has been read.
pub fn run_stream<R: Read, W: Write>(
    deployed: &Deployed,
    input: R,
    mut out: W,
    opts: StreamOptions,
) -> Result<StreamStats> {
    let mut reader = BufReader::with_capacity(1 << 16, input);
    let mut scorer = LineScorer::new(deployed, opts.delimiter);
    let mut buf = Vec::new();
    loop {
        if reader.buffer().is_empty() {
            out.flush()?;
        }
        let n = reader.read_until(b'\n', &mut buf).context("input lost")?;
        let complete = buf.last() == Some(&b'\n');
        if !complete {
            match opts.follow {
                Some(poll) => {
                    // partial line stays in `buf` until the rest arrives
                    let _ = n;
                    out.flush()?;
                    thread::sleep(poll);
                    continue;
                }
                None => {
                    if !buf.is_empty() {
                        scorer.line(&buf, &mut out)?;
                    }
                    break;
                }
            }
        }
        scorer.line(&buf, &mut out)?;
        buf.clear();
    }
    out.flush()?;
    Ok(scorer.stats())
}

pub fn run(args: WatchArgs) -> Result<()> {
    let deployed = ModelFile::load(&args.model)?.deploy()?;
    let delimiter = match args.delimiter {
        Some(c) => delimiter_byte(c)?,
        None => b',',
    };
    let out = BufWriter::new(io::stdout().lock());
    let result = match path_arg(&args.input) {
        Some(path) => {
            let file = File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
            let follow = (!args.no_follow).then(|| Duration::from_millis(args.poll_ms.max(1)));
            run_stream(&deployed, file, out, StreamOptions { delimiter, follow })
        }
        None => run_stream(&deployed, io::stdin().lock(), out, StreamOptions { delimiter, follow: None }),
    };
    match result {
        Ok(stats) => {
            eprintln!("watch: {} rows scored, {} malformed", stats.scored, stats.errors);
            Ok(())
        }
        Err(e) if is_broken_pipe(&e) => Ok(()),
        Err(e) => Err(e),
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe))
}
