use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{RadError, Result};
use crate::linalg::DataMatrix;

/// Rows rejected beyond this fraction make the whole file unusable.
const MAX_REJECTED_FRACTION: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Normal,
    Attack,
}

/// A data matrix with its column names and optional timestamps and labels.
/// Labels are for evaluation only; training never reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    matrix: DataMatrix,
    column_names: Vec<String>,
    timestamps: Option<Vec<String>>,
    labels: Option<Vec<Label>>,
}

impl Dataset {
    pub fn new(
        matrix: DataMatrix,
        column_names: Vec<String>,
        timestamps: Option<Vec<String>>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        if column_names.len() != matrix.dim() {
            return Err(RadError::LengthMismatch {
                what: "column names",
                expected: matrix.dim(),
                got: column_names.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(RadError::DuplicateColumn(name.clone()));
            }
        }
        if let Some(ts) = &timestamps {
            if ts.len() != matrix.n_rows() {
                return Err(RadError::LengthMismatch {
                    what: "timestamps",
                    expected: matrix.n_rows(),
                    got: ts.len(),
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != matrix.n_rows() {
                return Err(RadError::LengthMismatch {
                    what: "labels",
                    expected: matrix.n_rows(),
                    got: labels.len(),
                });
            }
        }
        Ok(Self {
            matrix,
            column_names,
            timestamps,
            labels,
        })
    }

    /// Unlabeled dataset with columns named `x0, x1, …`.
    pub fn from_matrix(matrix: DataMatrix) -> Self {
        let names = (0..matrix.dim()).map(|j| format!("x{j}")).collect();
        Self::new(matrix, names, None, None).expect("generated names are unique")
    }

    pub fn matrix(&self) -> &DataMatrix {
        &self.matrix
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    /// Same metadata, new values of identical shape.
    pub fn with_matrix(&self, matrix: DataMatrix) -> Result<Self> {
        if matrix.n_rows() != self.n_rows() || matrix.dim() != self.dim() {
            return Err(RadError::DimensionMismatch {
                expected: self.dim(),
                got: matrix.dim(),
            });
        }
        Ok(Self {
            matrix,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub timestamp_column: Option<String>,
    pub label_column: Option<String>,
    /// `None` takes every column except the timestamp and label columns.
    pub feature_columns: Option<Vec<String>>,
    pub delimiter: u8,
    /// Label values meaning normal operation, matched case-insensitively.
    pub normal_tokens: Vec<String>,
    pub attack_tokens: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp_column: None,
            label_column: None,
            feature_columns: None,
            delimiter: b',',
            normal_tokens: vec!["Normal".into(), "0".into()],
            attack_tokens: vec!["Attack".into(), "1".into()],
        }
    }
}

impl CsvSchema {
    pub fn parse_label(&self, raw: &str) -> Option<Label> {
        let matches = |tokens: &[String]| tokens.iter().any(|t| t.trim().eq_ignore_ascii_case(raw));
        if matches(&self.normal_tokens) {
            Some(Label::Normal)
        } else if matches(&self.attack_tokens) {
            Some(Label::Attack)
        } else {
            None
        }
    }

    fn label_token(&self, label: Label) -> &str {
        let tokens = match label {
            Label::Normal => &self.normal_tokens,
            Label::Attack => &self.attack_tokens,
        };
        tokens.first().map_or(match label {
            Label::Normal => "Normal",
            Label::Attack => "Attack",
        }, String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// Zero-based data row (header excluded).
    pub row: usize,
    /// One-based line in the file.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Loaded {
    pub dataset: Dataset,
    /// Zero-based data row (header excluded) of each accepted row.
    pub row_indices: Vec<usize>,
    pub rejected: Vec<RejectedRow>,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| RadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, schema)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(schema.delimiter)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(RadError::Empty("missing header row"));
    }
    let layout = RowLayout::new(&headers, schema)?;
    let feature_names = layout.feature_names.clone();
    let ts_idx = layout.timestamp_idx;

    let d = layout.dim();
    let mut values = Vec::new();
    let mut timestamps = ts_idx.map(|_| Vec::new());
    let mut labels = layout.label_idx.map(|_| Vec::new());
    let mut rejected = Vec::new();
    let mut row_indices = Vec::new();
    let mut total = 0usize;
    let mut record = csv::StringRecord::new();

    loop {
        let row = total;
        let line = rdr.position().line();
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                total += 1;
                rejected.push(RejectedRow { row, line, reason: e.to_string() });
                continue;
            }
        }
        total += 1;
        let line = record.position().map_or(line, |p| p.line());
        match layout.parse(&record) {
            Ok((feat, label)) => {
                values.extend_from_slice(&feat);
                row_indices.push(row);
                if let (Some(ts), Some(i)) = (timestamps.as_mut(), ts_idx) {
                    ts.push(record.get(i).unwrap_or_default().to_owned());
                }
                if let (Some(ls), Some(l)) = (labels.as_mut(), label) {
                    ls.push(l);
                }
            }
            Err(reason) => rejected.push(RejectedRow { row, line, reason }),
        }
    }

    if total == 0 {
        return Err(RadError::Empty("no data rows"));
    }
    if rejected.len() == total || rejected.len() as f64 > MAX_REJECTED_FRACTION * total as f64 {
        return Err(RadError::CorruptInput {
            rejected: rejected.len(),
            total,
        });
    }
    let n = values.len() / d;
    let matrix = DataMatrix::new(DMatrix::from_row_slice(n, d, &values))?;
    let dataset = Dataset::new(matrix, feature_names, timestamps, labels)?;
    Ok(Loaded { dataset, row_indices, rejected })
}

/// Column positions of one header, resolved against a schema. Shared by the
/// batch reader and line-at-a-time consumers.
#[derive(Debug, Clone)]
pub struct RowLayout {
    feature_names: Vec<String>,
    feature_idx: Vec<usize>,
    timestamp_idx: Option<usize>,
    label_idx: Option<usize>,
    schema: CsvSchema,
}

impl RowLayout {
    pub fn new(headers: &[String], schema: &CsvSchema) -> Result<Self> {
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(RadError::Empty("missing header row"));
        }
        let mut seen = HashSet::new();
        for h in headers {
            if !seen.insert(h.as_str()) {
                return Err(RadError::DuplicateColumn(h.clone()));
            }
        }
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| RadError::MissingColumn(name.to_owned()))
        };
        let timestamp_idx = schema.timestamp_column.as_deref().map(find).transpose()?;
        let label_idx = schema.label_column.as_deref().map(find).transpose()?;
        let feature_names: Vec<String> = match &schema.feature_columns {
            Some(cols) => cols.clone(),
            None => headers
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != timestamp_idx && Some(*i) != label_idx)
                .map(|(_, h)| h.clone())
                .collect(),
        };
        if feature_names.is_empty() {
            return Err(RadError::Empty("no feature columns"));
        }
        let feature_idx = feature_names
            .iter()
            .map(|n| find(n))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            feature_names,
            feature_idx,
            timestamp_idx,
            label_idx,
            schema: schema.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.feature_idx.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Features and label of one record, or a diagnostic.
    pub fn parse(&self, record: &csv::StringRecord) -> std::result::Result<(Vec<f64>, Option<Label>), String> {
        let mut feat = Vec::with_capacity(self.feature_idx.len());
        for (&i, name) in self.feature_idx.iter().zip(&self.feature_names) {
            let raw = record
                .get(i)
                .ok_or_else(|| format!("missing field for column `{name}`"))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| format!("column `{name}`: cannot parse `{raw}` as a number"))?;
            if !v.is_finite() {
                return Err(format!("column `{name}`: non-finite value `{raw}`"));
            }
            feat.push(v);
        }
        let label = match self.label_idx {
            None => None,
            Some(i) => {
                let raw = record.get(i).ok_or("missing label field")?;
                Some(
                    self.schema
                        .parse_label(raw)
                        .ok_or_else(|| format!("unrecognized label `{raw}`"))?,
                )
            }
        };
        Ok((feat, label))
    }
}

/// Writes timestamp (if any), feature columns, and label (if any). Values use
/// the shortest decimal form that parses back to the identical `f64`.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W, schema: &CsvSchema) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(schema.delimiter)
        .from_writer(writer);
    let ts_name = schema.timestamp_column.as_deref().unwrap_or("timestamp");
    let label_name = schema.label_column.as_deref().unwrap_or("label");

    let mut header: Vec<&str> = Vec::with_capacity(dataset.dim() + 2);
    if dataset.timestamps().is_some() {
        header.push(ts_name);
    }
    header.extend(dataset.column_names().iter().map(String::as_str));
    if dataset.labels().is_some() {
        header.push(label_name);
    }
    w.write_record(&header)?;

    let rows = dataset.matrix().rows_contiguous();
    let d = dataset.dim();
    let mut fields: Vec<String> = Vec::with_capacity(d + 2);
    for (i, row) in rows.as_slice().chunks_exact(d).enumerate() {
        fields.clear();
        if let Some(ts) = dataset.timestamps() {
            fields.push(ts[i].clone());
        }
        fields.extend(row.iter().map(|v| v.to_string()));
        if let Some(labels) = dataset.labels() {
            fields.push(schema.label_token(labels[i]).to_owned());
        }
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| RadError::Csv(e.into()))?;
    Ok(())
}
