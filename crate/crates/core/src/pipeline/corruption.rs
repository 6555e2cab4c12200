use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{RadError, Result};
use crate::linalg::DataMatrix;

use super::Dataset;

/// Training-data pollution: dense Gaussian noise plus periodic bursts on
/// selected columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    /// Stdev of the i.i.d. noise added to every entry; 0 disables it.
    pub gaussian_sigma: f64,
    pub burst_columns: Vec<String>,
    /// Rows between burst starts; bursts start at row 0.
    pub burst_period: usize,
    /// Consecutive rows per burst.
    pub burst_length: usize,
    /// Burst offset in units of the column's sample stdev.
    pub burst_magnitude: f64,
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            gaussian_sigma: 0.0,
            burst_columns: Vec::new(),
            burst_period: 25,
            burst_length: 1,
            burst_magnitude: 10.0,
            seed: 0,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.gaussian_sigma >= 0.0 && self.gaussian_sigma.is_finite()) {
            return Err(RadError::InvalidConfig(format!(
                "gaussian_sigma must be non-negative, got {}",
                self.gaussian_sigma
            )));
        }
        if self.burst_period == 0 || self.burst_length == 0 || self.burst_length > self.burst_period {
            return Err(RadError::InvalidConfig(format!(
                "need 1 ≤ burst_length ≤ burst_period, got length {} period {}",
                self.burst_length, self.burst_period
            )));
        }
        if !self.burst_magnitude.is_finite() {
            return Err(RadError::InvalidConfig("burst_magnitude must be finite".into()));
        }
        Ok(())
    }
}

/// Returns a corrupted copy of `ds`; labels and timestamps are untouched.
///
/// Noise is drawn row-major from a ChaCha8 stream seeded with `spec.seed`.
/// Burst offsets use the column's stdev before noise; a constant column uses
/// a unit stdev so bursts stay visible.
pub fn inject_corruption(ds: &Dataset, spec: &CorruptionSpec) -> Result<Dataset> {
    spec.validate()?;
    let burst_idx = spec
        .burst_columns
        .iter()
        .map(|c| ds.column_index(c).ok_or_else(|| RadError::UnknownColumn(c.clone())))
        .collect::<Result<Vec<_>>>()?;

    let src = ds.matrix().as_matrix();
    let (n, d) = src.shape();
    let mut out: DMatrix<f64> = src.clone();

    let stdevs: Vec<f64> = burst_idx
        .iter()
        .map(|&j| {
            let col = src.column(j);
            let mean = col.mean();
            let sd = if n > 1 {
                (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
            } else {
                0.0
            };
            if sd > 0.0 { sd } else { 1.0 }
        })
        .collect();

    if spec.gaussian_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let noise = Normal::new(0.0, spec.gaussian_sigma)
            .map_err(|e| RadError::InvalidConfig(e.to_string()))?;
        for i in 0..n {
            for j in 0..d {
                out[(i, j)] += noise.sample(&mut rng);
            }
        }
    }

    for (&j, sd) in burst_idx.iter().zip(&stdevs) {
        let offset = spec.burst_magnitude * sd;
        let mut start = 0;
        while start < n {
            for i in start..(start + spec.burst_length).min(n) {
                out[(i, j)] += offset;
            }
            start += spec.burst_period;
        }
    }

    ds.with_matrix(DataMatrix::new(out)?)
}
