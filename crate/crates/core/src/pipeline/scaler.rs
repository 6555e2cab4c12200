use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{RadError, Result};
use crate::linalg::DataMatrix;
use crate::median::median_in_place;

use super::Dataset;

/// Consistency constant turning a MAD into a normal-equivalent stdev.
const MAD_K: f64 = 1.4826;

/// Per-column affine map `x ↦ (x − center) / scale`, fitted on training data
/// and reused on test data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub center: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    /// Median/MAD per column. A constant column passes through untouched
    /// (center 0, scale 1). A non-constant column whose MAD is zero, such as
    /// a mostly-off actuator, falls back to its median and sample stdev.
    pub fn fit(m: &DataMatrix) -> Self {
        let data = m.as_matrix();
        let n = data.nrows();
        let mut center = Vec::with_capacity(data.ncols());
        let mut scale = Vec::with_capacity(data.ncols());
        let mut buf = vec![0.0; n];
        for col in data.column_iter() {
            buf.copy_from_slice(col.as_slice());
            let med = median_in_place(&mut buf);
            for (b, v) in buf.iter_mut().zip(col.iter()) {
                *b = (v - med).abs();
            }
            let mad = median_in_place(&mut buf);
            if mad > 0.0 {
                center.push(med);
                scale.push(MAD_K * mad);
                continue;
            }
            let first = col[0];
            if col.iter().all(|v| *v == first) {
                center.push(0.0);
                scale.push(1.0);
            } else {
                let mean = col.mean();
                let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
                center.push(med);
                scale.push(sd);
            }
        }
        Self { center, scale }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.center.len() != self.scale.len() {
            return Err(RadError::LengthMismatch {
                what: "scaler scale",
                expected: self.center.len(),
                got: self.scale.len(),
            });
        }
        if self.scale.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            || self.center.iter().any(|c| !c.is_finite())
        {
            return Err(RadError::InvalidConfig("scaler has invalid entries".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn transform_in_place(&self, x: &mut [f64]) {
        for ((v, c), s) in x.iter_mut().zip(&self.center).zip(&self.scale) {
            *v = (*v - c) / s;
        }
    }

    pub fn apply(&self, m: &DataMatrix) -> Result<DataMatrix> {
        if m.dim() != self.dim() {
            return Err(RadError::DimensionMismatch {
                expected: self.dim(),
                got: m.dim(),
            });
        }
        let src = m.as_matrix();
        DataMatrix::new(DMatrix::from_fn(src.nrows(), src.ncols(), |i, j| {
            (src[(i, j)] - self.center[j]) / self.scale[j]
        }))
    }
}

/// Robust z-scores of every column, with the fitted scaler.
pub fn standardize(ds: &Dataset) -> Result<(Dataset, Scaler)> {
    let scaler = Scaler::fit(ds.matrix());
    let out = ds.with_matrix(scaler.apply(ds.matrix())?)?;
    Ok((out, scaler))
}
