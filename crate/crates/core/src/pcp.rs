//! Principal Component Pursuit by the inexact augmented Lagrange multiplier
//! method.
//!
//! Solves
//!
//! ```text
//! minimize ‖L‖_* + λ‖S‖₁   subject to   L + S = M
//! ```
//!
//! Each iteration performs
//!
//! ```text
//! L ← svt(M − S + Y/μ, 1/μ)
//! S ← shrink(M − L + Y/μ, λ/μ)
//! Y ← Y + μ(M − L − S)
//! μ ← min(ρμ, μ_max)
//! ```
//!
//! and stops once `‖M − L − S‖_F ≤ tol·‖M‖_F`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{RadError, Result};
use crate::linalg::{shrink, spectral_norm, svt_with_rank, DataMatrix};

/// `1/√max(n_rows, d)`.
pub fn default_lambda(n_rows: usize, d: usize) -> f64 {
    1.0 / (n_rows.max(d).max(1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpConfig {
    /// Sparsity weight; `None` selects [`default_lambda`].
    pub lambda: Option<f64>,
    /// Relative stopping tolerance on `‖M − L − S‖_F / ‖M‖_F`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial penalty; `None` selects `1.25/σ₁(M)`.
    pub mu0: Option<f64>,
    /// Penalty growth factor.
    pub rho: f64,
    /// Penalty cap; `None` selects `1e7·μ₀`.
    pub mu_max: Option<f64>,
}

impl Default for PcpConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            tol: 1e-7,
            max_iter: 10_000,
            mu0: None,
            rho: 1.5,
            mu_max: None,
        }
    }
}

impl PcpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(RadError::InvalidConfig(msg));
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda must be positive, got {l}"));
            }
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return bad(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !(self.rho >= 1.0 && self.rho.is_finite()) {
            return bad(format!("rho must be ≥ 1, got {}", self.rho));
        }
        if let Some(mu0) = self.mu0 {
            if !(mu0 > 0.0 && mu0.is_finite()) {
                return bad(format!("mu0 must be positive, got {mu0}"));
            }
        }
        if let Some(mu_max) = self.mu_max {
            if !(mu_max > 0.0) {
                return bad(format!("mu_max must be positive, got {mu_max}"));
            }
            if let Some(mu0) = self.mu0 {
                if mu_max < mu0 {
                    return bad(format!("mu_max ({mu_max}) must be ≥ mu0 ({mu0})"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PcpResult {
    pub low_rank: DMatrix<f64>,
    pub sparse: DMatrix<f64>,
    pub iterations: usize,
    /// `‖M − L − S‖_F` after each iteration.
    pub residual_history: Vec<f64>,
    /// Penalty μ used in each iteration.
    pub mu_history: Vec<f64>,
    pub converged: bool,
    /// λ actually used.
    pub lambda: f64,
    /// Number of singular values kept by the final SVT step.
    pub final_rank: usize,
}

impl PcpResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }
}

pub fn pcp_decompose(m: &DataMatrix, cfg: &PcpConfig) -> Result<PcpResult> {
    cfg.validate()?;
    let m = m.as_matrix();
    let (n, d) = m.shape();
    let lambda = cfg.lambda.unwrap_or_else(|| default_lambda(n, d));
    let norm_fro = m.norm();

    if norm_fro == 0.0 {
        return Ok(PcpResult {
            low_rank: DMatrix::zeros(n, d),
            sparse: DMatrix::zeros(n, d),
            iterations: 1,
            residual_history: vec![0.0],
            mu_history: vec![0.0],
            converged: true,
            lambda,
            final_rank: 0,
        });
    }

    if let Some(res) = identical_rows_optimum(m, lambda) {
        return Ok(res);
    }

    let norm_two = spectral_norm(m)?;
    let norm_inf = m.amax() / lambda;
    let mut y = m / norm_two.max(norm_inf);
    let mut mu = cfg.mu0.unwrap_or(1.25 / norm_two);
    let mu_max = cfg.mu_max.unwrap_or(1e7 * mu);
    // An explicit cap below an automatic μ₀ would break the schedule.
    mu = mu.min(mu_max);

    let mut s = DMatrix::<f64>::zeros(n, d);
    let mut l = DMatrix::<f64>::zeros(n, d);
    let mut residual_history = Vec::new();
    let mut mu_history = Vec::new();
    let mut converged = false;
    let mut final_rank = 0;
    let stop = cfg.tol * norm_fro;

    for iteration in 1..=cfg.max_iter {
        let inv_mu = 1.0 / mu;
        let (l_next, rank) = svt_with_rank(&(m - &s + &y * inv_mu), inv_mu)?;
        l = l_next;
        final_rank = rank;
        s = shrink(&(m - &l + &y * inv_mu), lambda * inv_mu);

        let z = m - &l - &s;
        let residual = z.norm();
        if !residual.is_finite() || l.iter().any(|v| !v.is_finite()) {
            return Err(RadError::SolverDiverged { iteration });
        }
        y += &z * mu;
        residual_history.push(residual);
        mu_history.push(mu);

        if residual <= stop {
            converged = true;
            break;
        }
        mu = (mu * cfg.rho).min(mu_max);
    }

    Ok(PcpResult {
        iterations: residual_history.len(),
        low_rank: l,
        sparse: s,
        residual_history,
        mu_history,
        converged,
        lambda,
        final_rank,
    })
}

/// When every row equals `x`, `M = 1·xᵀ` and `L = M, S = 0` is optimal as
/// soon as the certificate `UVᵀ` (entries `|x_j|/(√n‖x‖)`) is bounded by λ.
/// Returned exactly rather than through the iteration, which stops at a
/// feasible but slightly suboptimal split on such inputs.
fn identical_rows_optimum(m: &DMatrix<f64>, lambda: f64) -> Option<PcpResult> {
    let (n, d) = m.shape();
    let first = m.row(0);
    if (1..n).any(|i| m.row(i) != first) {
        return None;
    }
    let norm = first.norm();
    if first.amax() / ((n as f64).sqrt() * norm) > lambda {
        return None;
    }
    Some(PcpResult {
        low_rank: m.clone(),
        sparse: DMatrix::zeros(n, d),
        iterations: 1,
        residual_history: vec![0.0],
        mu_history: vec![1.25 / (norm * (n as f64).sqrt())],
        converged: true,
        lambda,
        final_rank: 1,
    })
}
