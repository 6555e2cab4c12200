//! Training, scoring and classification.
//!
//! A trained [`RadModel`] is the triplet `{A, m, θ}`: an orthonormal basis of
//! the stable subspace, the geometric median of the projected training rows,
//! and the radius of the normal-behavior ball around it. A reading `x` scores
//! `‖m − A(Aᵀx)‖₂` and is an anomaly when the score strictly exceeds `θ`.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{RadError, Result};
use crate::linalg::{distance, orthonormal_basis, Basis, DataMatrix, DEFAULT_RANK_TOL};
use crate::median::{geometric_median_of_columns, MedianConfig};
use crate::par;
use crate::pcp::{pcp_decompose, PcpConfig, PcpResult};

/// Thresholds at or below this fraction of `1 + ‖m‖` are rounding noise and
/// are stored as exactly zero.
const THRESHOLD_FLOOR_REL: f64 = 1e-12;

/// Which training rows define the threshold radius.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ThresholdMode {
    /// `θ = maxᵢ ‖m − Lᵢ‖₂` over rows of the low-rank component.
    #[default]
    LowRankRows,
    /// `θ = maxᵢ ‖m − A(Aᵀxᵢ)‖₂` over projected training rows.
    ProjectedRows,
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::LowRankRows => "LOW_RANK_ROWS",
            ThresholdMode::ProjectedRows => "PROJECTED_ROWS",
        })
    }
}

impl std::str::FromStr for ThresholdMode {
    type Err = RadError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "low_rank_rows" | "low_rank" => Ok(ThresholdMode::LowRankRows),
            "projected_rows" | "projected" => Ok(ThresholdMode::ProjectedRows),
            other => Err(RadError::InvalidConfig(format!("unknown threshold mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Normal,
    Anomaly,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Normal => "NORMAL",
            Verdict::Anomaly => "ANOMALY",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRecord {
    pub row_index: usize,
    /// `‖m − A(Aᵀx)‖₂`.
    pub score: f64,
    /// `score / θ`; `+∞` when `θ = 0 < score`, and `0` when both are zero.
    pub normalized: f64,
    pub verdict: Verdict,
    /// Diagnostic `‖x − A(Aᵀx)‖₂`; never affects the verdict.
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub pcp: PcpConfig,
    pub median: MedianConfig,
    pub rank_tol: f64,
    pub threshold_mode: ThresholdMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            pcp: PcpConfig::default(),
            median: MedianConfig::default(),
            rank_tol: DEFAULT_RANK_TOL,
            threshold_mode: ThresholdMode::default(),
        }
    }
}

/// Solver outcome recorded alongside a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcpSummary {
    pub config: PcpConfig,
    pub lambda: f64,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n_rows: usize,
    pub d: usize,
    pub r: usize,
    pub rank_tol: f64,
    /// SHA-256 of the training matrix (shape, then row-major little-endian
    /// values).
    pub data_fingerprint: String,
    /// `None` for the plain-PCA baseline.
    pub pcp: Option<PcpSummary>,
    pub median_converged: bool,
    pub baseline: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadModel {
    basis: Basis,
    median: Vec<f64>,
    threshold: f64,
    threshold_mode: ThresholdMode,
    provenance: Provenance,
}

/// Reusable buffers for allocation-free scoring.
#[derive(Debug, Clone)]
pub struct ScoreScratch {
    coeffs: Vec<f64>,
    proj: Vec<f64>,
}

impl RadModel {
    /// Assembles a model from stored parts, checking shapes, `θ ≥ 0`, and that
    /// the median lies in the span of the basis.
    pub fn from_parts(
        basis: Basis,
        median: Vec<f64>,
        threshold: f64,
        threshold_mode: ThresholdMode,
        provenance: Provenance,
    ) -> Result<Self> {
        if median.len() != basis.dim() {
            return Err(RadError::DimensionMismatch {
                expected: basis.dim(),
                got: median.len(),
            });
        }
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(RadError::InvalidConfig(format!(
                "threshold must be finite and non-negative, got {threshold}"
            )));
        }
        if median.iter().any(|v| !v.is_finite()) {
            return Err(RadError::InvalidConfig("median has non-finite entries".into()));
        }
        let off = distance(&median, &basis.project(&median)?);
        let norm = median.iter().map(|v| v * v).sum::<f64>().sqrt();
        if off > 1e-8 * (1.0 + norm) {
            return Err(RadError::InvalidConfig(format!(
                "median lies {off:e} outside the basis span"
            )));
        }
        Ok(Self {
            basis,
            median,
            threshold,
            threshold_mode,
            provenance,
        })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn median(&self) -> &[f64] {
        &self.median
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn threshold_mode(&self) -> ThresholdMode {
        self.threshold_mode
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    /// Stored scalars: `d·r + d + 1`.
    pub fn parameter_count(&self) -> usize {
        self.dim() * self.rank() + self.dim() + 1
    }

    pub fn scratch(&self) -> ScoreScratch {
        ScoreScratch {
            coeffs: vec![0.0; self.rank()],
            proj: vec![0.0; self.dim()],
        }
    }

    /// Returns `(score, residual_norm)` without allocating. `x` must have
    /// length `d`.
    #[inline]
    pub fn score_with(&self, x: &[f64], scratch: &mut ScoreScratch) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.dim());
        self.basis
            .project_into(x, &mut scratch.coeffs, &mut scratch.proj);
        let score = distance(&self.median, &scratch.proj);
        let residual = distance(x, &scratch.proj);
        (score, residual)
    }

    pub fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.score_with(x, &mut self.scratch()).0)
    }

    pub fn classify(&self, row_index: usize, x: &[f64]) -> Result<ScoreRecord> {
        self.check_dim(x)?;
        Ok(self.classify_with(row_index, x, &mut self.scratch()))
    }

    #[inline]
    pub fn classify_with(&self, row_index: usize, x: &[f64], scratch: &mut ScoreScratch) -> ScoreRecord {
        let (score, residual_norm) = self.score_with(x, scratch);
        self.record(row_index, score, residual_norm)
    }

    /// Builds the record for an already computed score.
    pub fn record(&self, row_index: usize, score: f64, residual_norm: f64) -> ScoreRecord {
        let theta = self.threshold;
        let normalized = if theta > 0.0 {
            score / theta
        } else if score > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        ScoreRecord {
            row_index,
            score,
            normalized,
            verdict: if score > theta {
                Verdict::Anomaly
            } else {
                Verdict::Normal
            },
            residual_norm,
        }
    }

    /// Classifies every row of `data`, in row order. Rows are processed in
    /// parallel when the `parallel` feature is enabled.
    pub fn score_batch(&self, data: &DataMatrix) -> Result<Vec<ScoreRecord>> {
        self.check_dim_matrix(data)?;
        let rows = data.rows_contiguous();
        let d = self.dim();
        let flat = rows.as_slice();
        Ok(par::map_indices_with(
            data.n_rows(),
            || self.scratch(),
            |scratch, i| self.classify_with(i, &flat[i * d..(i + 1) * d], scratch),
        ))
    }

    /// Single-threaded [`score_batch`](Self::score_batch), available in every
    /// build.
    pub fn score_batch_sequential(&self, data: &DataMatrix) -> Result<Vec<ScoreRecord>> {
        self.check_dim_matrix(data)?;
        let rows = data.rows_contiguous();
        let d = self.dim();
        let mut scratch = self.scratch();
        Ok(rows
            .as_slice()
            .chunks_exact(d)
            .enumerate()
            .map(|(i, x)| self.classify_with(i, x, &mut scratch))
            .collect())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(RadError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn check_dim_matrix(&self, data: &DataMatrix) -> Result<()> {
        if data.dim() != self.dim() {
            return Err(RadError::DimensionMismatch {
                expected: self.dim(),
                got: data.dim(),
            });
        }
        Ok(())
    }
}

/// `‖m − A(Aᵀx)‖₂`.
pub fn score(model: &RadModel, x: &[f64]) -> Result<f64> {
    model.score(x)
}

pub fn classify(model: &RadModel, x: &[f64]) -> Result<ScoreRecord> {
    model.classify(0, x)
}

/// A trained model together with the solver run that produced it.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: RadModel,
    pub pcp: PcpResult,
}

pub fn train(m: &DataMatrix, cfg: &TrainConfig) -> Result<RadModel> {
    Ok(train_with_report(m, cfg)?.model)
}

/// Runs PCP, extracts the basis of the low-rank part, projects the training
/// rows, takes their geometric median and sets the threshold.
pub fn train_with_report(m: &DataMatrix, cfg: &TrainConfig) -> Result<TrainReport> {
    if m.n_rows() < 2 {
        return Err(RadError::InvalidConfig(format!(
            "training needs at least 2 rows, got {}",
            m.n_rows()
        )));
    }
    cfg.median.validate()?;
    let pcp = pcp_decompose(m, &cfg.pcp)?;
    let basis = orthonormal_basis(&pcp.low_rank, cfg.rank_tol)?;
    let projected = project_rows(&basis, m);
    let med = geometric_median_of_columns(&projected, &cfg.median)?;

    let theta = match cfg.threshold_mode {
        ThresholdMode::LowRankRows => max_distance(&med.point, &pcp.low_rank.transpose()),
        ThresholdMode::ProjectedRows => max_distance(&med.point, &projected),
    };
    let theta = snap_threshold(theta, &med.point);

    let mut warnings = Vec::new();
    if !pcp.converged {
        warnings.push(format!(
            "PCP stopped after {} iterations without reaching tol {:e} (relative residual {:e})",
            pcp.iterations,
            cfg.pcp.tol,
            pcp.final_residual() / m.frobenius_norm()
        ));
    }
    if !med.converged {
        warnings.push(format!(
            "geometric median stopped after {} iterations without converging",
            med.iterations
        ));
    }
    if theta == 0.0 {
        warnings.push("zero threshold: every training row maps onto the median".into());
    }

    let provenance = Provenance {
        n_rows: m.n_rows(),
        d: m.dim(),
        r: basis.rank(),
        rank_tol: cfg.rank_tol,
        data_fingerprint: fingerprint(m),
        pcp: Some(PcpSummary {
            config: cfg.pcp.clone(),
            lambda: pcp.lambda,
            iterations: pcp.iterations,
            final_residual: pcp.final_residual(),
            converged: pcp.converged,
        }),
        median_converged: med.converged,
        baseline: false,
        warnings,
    };
    let model = RadModel::from_parts(basis, med.point, theta, cfg.threshold_mode, provenance)?;
    Ok(TrainReport { model, pcp })
}

/// Non-robust reference: ordinary SVD of `M` for the basis and the
/// arithmetic mean of the projected rows as the center.
pub fn train_pca_baseline(m: &DataMatrix, rank_tol: f64) -> Result<RadModel> {
    if m.n_rows() < 2 {
        return Err(RadError::InvalidConfig(format!(
            "training needs at least 2 rows, got {}",
            m.n_rows()
        )));
    }
    let basis = orthonormal_basis(m.as_matrix(), rank_tol)?;
    let projected = project_rows(&basis, m);
    let n = projected.ncols();
    // shifted by the first row, so identical rows give their exact value
    let first: Vec<f64> = projected.column(0).iter().copied().collect();
    let mut shift = vec![0.0; basis.dim()];
    for z in projected.column_iter() {
        for ((acc, v), f) in shift.iter_mut().zip(z.iter()).zip(&first) {
            *acc += v - f;
        }
    }
    let mean: Vec<f64> = first.iter().zip(&shift).map(|(f, s)| f + s / n as f64).collect();
    let theta = snap_threshold(max_distance(&mean, &projected), &mean);

    let mut warnings = Vec::new();
    if theta == 0.0 {
        warnings.push("zero threshold: every training row maps onto the mean".into());
    }
    let provenance = Provenance {
        n_rows: m.n_rows(),
        d: m.dim(),
        r: basis.rank(),
        rank_tol,
        data_fingerprint: fingerprint(m),
        pcp: None,
        median_converged: true,
        baseline: true,
        warnings,
    };
    RadModel::from_parts(basis, mean, theta, ThresholdMode::ProjectedRows, provenance)
}

/// `d × n` matrix whose column `i` is `A(Aᵀxᵢ)`.
fn project_rows(basis: &Basis, m: &DataMatrix) -> DMatrix<f64> {
    let (n, d) = (m.n_rows(), m.dim());
    let rows = m.rows_contiguous();
    let src = rows.as_slice();
    let mut out = DMatrix::<f64>::zeros(d, n);
    par::for_each_chunk_mut(out.as_mut_slice(), d, |i, dst| {
        let mut coeffs = vec![0.0; basis.rank()];
        basis.project_into(&src[i * d..(i + 1) * d], &mut coeffs, dst);
    });
    out
}

/// Largest distance from `center` to a column of `points` (`d × n`).
fn max_distance(center: &[f64], points: &DMatrix<f64>) -> f64 {
    let d = points.nrows();
    let flat = points.as_slice();
    par::map_indices(points.ncols(), |i| distance(center, &flat[i * d..(i + 1) * d]))
        .into_iter()
        .fold(0.0, f64::max)
}

fn snap_threshold(theta: f64, center: &[f64]) -> f64 {
    let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
    if theta <= THRESHOLD_FLOOR_REL * (1.0 + norm) {
        0.0
    } else {
        theta
    }
}

/// SHA-256 over `(n_rows, d)` as little-endian u64 followed by the row-major
/// little-endian bytes of every value.
pub fn fingerprint(m: &DataMatrix) -> String {
    let mut h = Sha256::new();
    h.update((m.n_rows() as u64).to_le_bytes());
    h.update((m.dim() as u64).to_le_bytes());
    for v in m.rows_contiguous().iter() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn axis_model(theta: f64) -> RadModel {
        // A = [e1, e2] in R³, m = (1, 1, 0).
        let basis = Basis::new(DMatrix::from_column_slice(3, 2, &[1., 0., 0., 0., 1., 0.])).unwrap();
        let prov = Provenance {
            n_rows: 0,
            d: 3,
            r: 2,
            rank_tol: DEFAULT_RANK_TOL,
            data_fingerprint: String::new(),
            pcp: None,
            median_converged: true,
            baseline: false,
            warnings: vec![],
        };
        RadModel::from_parts(basis, vec![1.0, 1.0, 0.0], theta, ThresholdMode::LowRankRows, prov)
            .unwrap()
    }

    #[test]
    fn score_examples() {
        let model = axis_model(1.0);
        assert_eq!(model.score(&[1.0, 1.0, 0.0]).unwrap(), 0.0);
        // unit vector in span, c = 2.5
        let s = model.score(&[1.0 + 2.5 * 0.6, 1.0 + 2.5 * 0.8, 0.0]).unwrap();
        assert!((s - 2.5).abs() < 1e-12);
        // orthogonal direction is invisible to the score
        assert_eq!(model.score(&[1.0, 1.0, 40.0]).unwrap(), 0.0);
        let rec = model.classify(0, &[1.0, 1.0, 40.0]).unwrap();
        assert_eq!(rec.residual_norm, 40.0);
        assert_eq!(rec.verdict, Verdict::Normal);
        assert!(model.score(&[1.0]).is_err());
    }

    #[test]
    fn classify_examples() {
        let model = axis_model(2.0);
        let rec = model.classify(3, &[1.0 + 2.02, 1.0, 0.0]).unwrap();
        assert_eq!(rec.verdict, Verdict::Anomaly);
        assert_eq!(rec.row_index, 3);
        assert!((rec.normalized - 1.01).abs() < 1e-12);
        // equality is normal
        let rec = model.classify(0, &[3.0, 1.0, 0.0]).unwrap();
        assert_eq!(rec.score, 2.0);
        assert_eq!(rec.verdict, Verdict::Normal);
        let rec = model.classify(0, &[1.0, 1.0, 0.0]).unwrap();
        assert_eq!((rec.score, rec.verdict), (0.0, Verdict::Normal));
    }

    #[test]
    fn zero_threshold_convention() {
        let model = axis_model(0.0);
        let rec = model.classify(0, &[1.0 + 1e-9, 1.0, 0.0]).unwrap();
        assert_eq!(rec.verdict, Verdict::Anomaly);
        assert_eq!(rec.normalized, f64::INFINITY);
        let rec = model.classify(0, &[1.0, 1.0, 5.0]).unwrap();
        assert_eq!(rec.verdict, Verdict::Normal);
        assert_eq!(rec.normalized, 0.0);
    }

    #[test]
    fn from_parts_checks_median_span() {
        let basis = Basis::new(DMatrix::from_column_slice(3, 1, &[1., 0., 0.])).unwrap();
        let prov = axis_model(1.0).provenance().clone();
        assert!(RadModel::from_parts(basis.clone(), vec![1.0, 0.5, 0.0], 1.0, ThresholdMode::LowRankRows, prov.clone()).is_err());
        assert!(RadModel::from_parts(basis.clone(), vec![1.0, 0.0, 0.0], -1.0, ThresholdMode::LowRankRows, prov.clone()).is_err());
        assert!(RadModel::from_parts(basis, vec![1.0, 0.0], 1.0, ThresholdMode::LowRankRows, prov).is_err());
    }

    #[test]
    fn identical_rows() {
        let x0 = [2.0, -1.0, 0.5, 3.0];
        let rows: Vec<Vec<f64>> = (0..12).map(|_| x0.to_vec()).collect();
        let m = DataMatrix::from_rows(&rows).unwrap();
        for mode in [ThresholdMode::LowRankRows, ThresholdMode::ProjectedRows] {
            let cfg = TrainConfig { threshold_mode: mode, ..Default::default() };
            let model = train(&m, &cfg).unwrap();
            assert_eq!(model.rank(), 1);
            assert_eq!(model.threshold(), 0.0, "{mode}");
            assert!(distance(model.median(), &x0) < 1e-12);
            assert!(model.provenance().warnings.iter().any(|w| w.contains("zero threshold")));
            // training rows are normal under θ = 0
            for rec in model.score_batch(&m).unwrap() {
                assert_eq!(rec.verdict, Verdict::Normal);
            }
        }
        let base = train_pca_baseline(&m, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(base.threshold(), 0.0);
        assert!(distance(base.median(), &x0) < 1e-12);
        assert!(base.provenance().baseline);
    }

    #[test]
    fn too_few_rows() {
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(train(&m, &TrainConfig::default()).is_err());
        assert!(train_pca_baseline(&m, DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn batch_matches_single_and_sequential() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let model = axis_model(0.7);
        let data = DataMatrix::new(DMatrix::from_fn(300, 3, |_, _| rng.random_range(-2.0..2.0))).unwrap();
        let par = model.score_batch(&data).unwrap();
        let seq = model.score_batch_sequential(&data).unwrap();
        assert_eq!(par, seq);
        for (i, rec) in par.iter().enumerate() {
            assert_eq!(rec.row_index, i);
            assert_eq!(rec.score.to_bits(), model.score(&data.row(i)).unwrap().to_bits());
        }
    }

    #[test]
    fn threshold_mode_parsing() {
        assert_eq!("projected_rows".parse::<ThresholdMode>().unwrap(), ThresholdMode::ProjectedRows);
        assert_eq!("LOW_RANK_ROWS".parse::<ThresholdMode>().unwrap(), ThresholdMode::LowRankRows);
        assert!("nope".parse::<ThresholdMode>().is_err());
    }
}
