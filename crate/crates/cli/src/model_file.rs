//! On-disk model format.
//!
//! The default encoding is pretty-printed JSON. Every real is written in the
//! shortest decimal form that parses back to the same `f64`, so numerics
//! survive a round trip bitwise. `--binary` selects a compact layout:
//!
//! ```text
//! magic    8 bytes  "RADMODL\0"
//! version  u32 LE
//! d, r     u32 LE each
//! A        d·r f64 LE, row-major
//! median   d f64 LE
//! θ        f64 LE
//! meta_len u32 LE, followed by that many bytes of JSON metadata
//! ```

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::DMatrix;
use rad_core::pipeline::Scaler;
use rad_core::{Basis, Provenance, RadModel, ThresholdMode};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"RADMODL\0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub threshold_mode: ThresholdMode,
    /// Feature columns, in basis row order.
    pub feature_names: Vec<String>,
    /// Present when the model was trained on standardized data; applied to
    /// every row before scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaler: Option<Scaler>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub d: usize,
    pub r: usize,
    /// `d × r`, row-major.
    pub basis: Vec<f64>,
    pub median: Vec<f64>,
    pub threshold: f64,
    #[serde(flatten)]
    pub meta: ModelMeta,
}

/// A loaded model together with what it needs to read raw rows.
#[derive(Debug, Clone)]
pub struct Deployed {
    pub model: RadModel,
    pub feature_names: Vec<String>,
    pub scaler: Option<Scaler>,
}

impl Deployed {
    /// Applies the stored scaler, if any, in place.
    pub fn prepare(&self, row: &mut [f64]) {
        if let Some(s) = &self.scaler {
            s.transform_in_place(row);
        }
    }
}

impl ModelFile {
    pub fn new(model: &RadModel, feature_names: Vec<String>, scaler: Option<Scaler>) -> Self {
        let a = model.basis().matrix();
        let (d, r) = a.shape();
        let mut basis = Vec::with_capacity(d * r);
        for i in 0..d {
            basis.extend(a.row(i).iter());
        }
        Self {
            format_version: FORMAT_VERSION,
            d,
            r,
            basis,
            median: model.median().to_vec(),
            threshold: model.threshold(),
            meta: ModelMeta {
                threshold_mode: model.threshold_mode(),
                feature_names,
                scaler,
                provenance: model.provenance().clone(),
            },
        }
    }

    pub fn deploy(&self) -> Result<Deployed> {
        let (d, r) = (self.d, self.r);
        ensure!(self.basis.len() == d * r, "model file: basis has {} values, expected {}", self.basis.len(), d * r);
        ensure!(self.median.len() == d, "model file: median has {} values, expected {d}", self.median.len());
        ensure!(
            self.meta.feature_names.len() == d,
            "model file: {} feature names for d = {d}",
            self.meta.feature_names.len()
        );
        if let Some(s) = &self.meta.scaler {
            ensure!(s.dim() == d, "model file: scaler has dimension {}, expected {d}", s.dim());
            s.validate().context("model file: bad scaler")?;
        }
        let basis = Basis::new(DMatrix::from_row_slice(d, r, &self.basis)).context("model file: bad basis")?;
        let model = RadModel::from_parts(
            basis,
            self.median.clone(),
            self.threshold,
            self.meta.threshold_mode,
            self.meta.provenance.clone(),
        )
        .context("model file: inconsistent parameters")?;
        Ok(Deployed {
            model,
            feature_names: self.meta.feature_names.clone(),
            scaler: self.meta.scaler.clone(),
        })
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("model file serializes");
        out.push(b'\n');
        out
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.meta).expect("model metadata serializes");
        let mut out = Vec::with_capacity(28 + 8 * (self.basis.len() + self.median.len() + 1) + meta.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.d as u32).to_le_bytes());
        out.extend_from_slice(&(self.r as u32).to_le_bytes());
        for v in self.basis.iter().chain(&self.median).chain(std::iter::once(&self.threshold)) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out
    }

    /// Decodes either encoding, refusing any other format version.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(MAGIC) {
            return Self::from_binary(bytes);
        }
        let value: serde_json::Value = serde_json::from_slice(bytes).context("model file is neither JSON nor binary")?;
        let version = value.get("format_version").and_then(serde_json::Value::as_u64);
        match version {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => bail!("model file format version {v} is not supported (expected {FORMAT_VERSION})"),
            None => bail!("model file has no format_version"),
        }
        serde_json::from_value(value).context("malformed model file")
    }

    fn from_binary(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: MAGIC.len() };
        let version = cur.u32()?;
        ensure!(
            version == FORMAT_VERSION,
            "model file format version {version} is not supported (expected {FORMAT_VERSION})"
        );
        let d = cur.u32()? as usize;
        let r = cur.u32()? as usize;
        let basis = cur.f64s(d.checked_mul(r).context("model file: bad shape")?)?;
        let median = cur.f64s(d)?;
        let threshold = cur.f64s(1)?[0];
        let meta_len = cur.u32()? as usize;
        let meta = serde_json::from_slice(cur.take(meta_len)?).context("malformed model metadata")?;
        ensure!(cur.pos == bytes.len(), "model file has {} trailing bytes", bytes.len() - cur.pos);
        Ok(Self {
            format_version: version,
            d,
            r,
            basis,
            median,
            threshold,
            meta,
        })
    }

    pub fn save(&self, path: &Path, binary: bool) -> Result<()> {
        let bytes = if binary { self.to_binary() } else { self.to_json() };
        fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).with_context(|| format!("cannot read model {}", path.display()))?;
        Self::from_bytes(&bytes).with_context(|| format!("cannot load model {}", path.display()))
    }
}

pub fn is_binary(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let Some(end) = end else {
            bail!("model file is truncated");
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).context("model file: bad shape")?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}
