//! Geometric median by Weiszfeld's iteration.
//!
//! The plain Weiszfeld map
//!
//! ```text
//! T(y) = Σ z_i/‖z_i − y‖ / Σ 1/‖z_i − y‖
//! ```
//!
//! is undefined when `y` coincides with a data point. In that case the
//! Vardi–Zhang modification is used: with `η` the multiplicity of the
//! coincident point and `R(y) = Σ_{z_i ≠ y} (z_i − y)/‖z_i − y‖`,
//!
//! ```text
//! y ← (1 − η/‖R‖)·T̃(y) + (η/‖R‖)·y      if ‖R‖ > η
//! ```
//!
//! where `T̃` is the Weiszfeld map over the non-coincident points. When
//! `‖R‖ ≤ η` the coincident point is itself optimal.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{RadError, Result};
use crate::linalg::distance;
use crate::par;

const CHUNK: usize = 512;

/// Stopping parameters. `tol` and `anchor_eps` are relative to the data
/// scale, taken as the mean distance of the points from the coordinate-wise
/// median.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianConfig {
    /// Stop when `‖y_{k+1} − y_k‖₂ ≤ tol · scale`.
    pub tol: f64,
    pub max_iter: usize,
    /// An iterate closer than `anchor_eps · scale` to a data point is treated
    /// as sitting on it.
    pub anchor_eps: f64,
}

impl Default for MedianConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 1000,
            anchor_eps: 1e-12,
        }
    }
}

impl MedianConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.anchor_eps > 0.0) || self.max_iter == 0 {
            return Err(RadError::InvalidConfig(format!(
                "median config requires tol > 0, anchor_eps > 0, max_iter > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MedianResult {
    pub point: Vec<f64>,
    /// `Σ ‖z_i − y‖₂` at the returned point.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at each visited iterate, starting from the initial guess.
    pub objective_history: Vec<f64>,
}

/// Geometric median of the rows of `points` (`n × d`).
pub fn geometric_median(points: &DMatrix<f64>, cfg: &MedianConfig) -> Result<MedianResult> {
    geometric_median_of_columns(&points.transpose(), cfg)
}

/// Geometric median of the columns of `points` (`d × n`), each stored
/// contiguously.
pub fn geometric_median_of_columns(
    points: &DMatrix<f64>,
    cfg: &MedianConfig,
) -> Result<MedianResult> {
    cfg.validate()?;
    let (d, n) = points.shape();
    if n == 0 || d == 0 {
        return Err(RadError::Empty("geometric median of an empty point set"));
    }
    if let Some(idx) = points.iter().position(|v| !v.is_finite()) {
        return Err(RadError::NonFinite {
            row: idx / d,
            col: idx % d,
        });
    }
    let data = points.as_slice();
    let point = |i: usize| &data[i * d..(i + 1) * d];

    if n <= 2 {
        let y: Vec<f64> = if n == 1 {
            point(0).to_vec()
        } else {
            point(0).iter().zip(point(1)).map(|(a, b)| 0.5 * (a + b)).collect()
        };
        let objective = objective(data, d, &y);
        return Ok(MedianResult {
            point: y,
            objective,
            iterations: 0,
            converged: true,
            objective_history: vec![objective],
        });
    }

    let mut y = coordinate_median(points);
    let mut dist = distances(data, d, &y);
    let scale = dist.iter().sum::<f64>() / n as f64;
    let mut history = vec![dist.iter().sum::<f64>()];
    if scale == 0.0 {
        return Ok(MedianResult {
            point: y,
            objective: 0.0,
            iterations: 0,
            converged: true,
            objective_history: history,
        });
    }
    let tol = cfg.tol * scale;
    let anchor = cfg.anchor_eps * scale;

    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        let (num, denom, coincident) = weighted_sums(data, d, &dist, anchor);

        let next: Vec<f64> = if coincident == 0 {
            num.iter().map(|v| v / denom).collect()
        } else {
            // R(y) = num − denom·y
            let r = num
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - denom * b).powi(2))
                .sum::<f64>()
                .sqrt();
            let eta = coincident as f64;
            if r <= eta || denom == 0.0 {
                converged = true;
                break;
            }
            let t = eta / r;
            num.iter()
                .zip(&y)
                .map(|(a, b)| (1.0 - t) * (a / denom) + t * b)
                .collect()
        };

        let step = distance(&next, &y);
        y = next;
        dist = distances(data, d, &y);
        history.push(dist.iter().sum());
        if step <= tol {
            converged = true;
            break;
        }
    }

    Ok(MedianResult {
        objective: *history.last().unwrap(),
        point: y,
        iterations,
        converged,
        objective_history: history,
    })
}

/// Coordinate-wise median, averaging the two middle values for even counts.
pub fn coordinate_median(points_as_columns: &DMatrix<f64>) -> Vec<f64> {
    let (d, n) = points_as_columns.shape();
    let mut buf = vec![0.0; n];
    (0..d)
        .map(|j| {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = points_as_columns[(j, i)];
            }
            median_in_place(&mut buf)
        })
        .collect()
}

pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    values.sort_unstable_by(f64::total_cmp);
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn objective(data: &[f64], d: usize, y: &[f64]) -> f64 {
    distances(data, d, y).iter().sum()
}

fn distances(data: &[f64], d: usize, y: &[f64]) -> Vec<f64> {
    let n = data.len() / d;
    par::map_indices(n, |i| distance(&data[i * d..(i + 1) * d], y))
}

/// Returns `(Σ z_i/δ_i, Σ 1/δ_i, #coincident)` over points farther than
/// `anchor`. Partial sums are formed over fixed chunks and combined in order,
/// so the result does not depend on the thread count.
fn weighted_sums(data: &[f64], d: usize, dist: &[f64], anchor: f64) -> (Vec<f64>, f64, usize) {
    let n = dist.len();
    let chunks = n.div_ceil(CHUNK);
    let partials = par::map_indices(chunks, |c| {
        let mut num = vec![0.0; d];
        let mut denom = 0.0;
        let mut coincident = 0usize;
        for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
            if dist[i] < anchor {
                coincident += 1;
                continue;
            }
            let w = 1.0 / dist[i];
            denom += w;
            for (acc, z) in num.iter_mut().zip(&data[i * d..(i + 1) * d]) {
                *acc += w * z;
            }
        }
        (num, denom, coincident)
    });
    let mut num = vec![0.0; d];
    let mut denom = 0.0;
    let mut coincident = 0;
    for (pn, pd, pc) in partials {
        for (a, b) in num.iter_mut().zip(&pn) {
            *a += b;
        }
        denom += pd;
        coincident += pc;
    }
    (num, denom, coincident)
}
