//! Dense matrix primitives: SVD, shrinkage operators, orthonormal basis
//! extraction and subspace projection.
//!
//! Matrices are `nalgebra::DMatrix<f64>` (column-major). Rows of a data matrix
//! are timestamps, columns are sensors/actuators.

use nalgebra::{DMatrix, DVector};

use crate::error::{RadError, Result};

/// Absolute floor under which a matrix is treated as numerically zero.
pub const ZERO_FLOOR: f64 = 1e-12;

/// Default relative rank cutoff: keep singular values above `rank_tol · σ₁`.
pub const DEFAULT_RANK_TOL: f64 = 1e-6;

/// An `n_rows × d` matrix of finite readings. Row `i` is the state vector at
/// timestamp `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() == 0 {
            return Err(RadError::Empty("data matrix has no rows"));
        }
        if values.ncols() == 0 {
            return Err(RadError::Empty("data matrix has no columns"));
        }
        for col in 0..values.ncols() {
            for row in 0..values.nrows() {
                if !values[(row, col)].is_finite() {
                    return Err(RadError::NonFinite { row, col });
                }
            }
        }
        Ok(Self(values))
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_slice(n_rows: usize, d: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n_rows * d {
            return Err(RadError::LengthMismatch {
                what: "row-major data",
                expected: n_rows * d,
                got: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n_rows, d, data))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * d);
        for row in rows {
            if row.len() != d {
                return Err(RadError::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_slice(rows.len(), d, &flat)
    }

    pub fn n_rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    /// Transposed copy: column `i` of the result is row `i` of `self`, stored
    /// contiguously.
    pub fn rows_contiguous(&self) -> DMatrix<f64> {
        self.0.transpose()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Thin singular value decomposition `M = U · diag(σ) · Vᵀ`, with σ sorted
/// non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

/// Convergence threshold for the implicit-shift QR sweeps. Tighter values
/// (e.g. a single machine epsilon) can make exactly rank-deficient inputs
/// converge to wrong factors.
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

/// Thin SVD. Returns `k = min(n, d)` factors.
pub fn svd(m: &DMatrix<f64>) -> Result<SvdFactors> {
    let dec = nalgebra::SVD::try_new(m.clone(), true, true, SVD_EPS, 0)
        .ok_or(RadError::SvdFailed)?;
    let u = dec.u.ok_or(RadError::SvdFailed)?;
    let v_t = dec.v_t.ok_or(RadError::SvdFailed)?;
    Ok(SvdFactors {
        u,
        singular_values: dec.singular_values,
        v: v_t.transpose(),
    })
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    let sv = m
        .clone()
        .try_svd(false, false, SVD_EPS, 0)
        .ok_or(RadError::SvdFailed)?
        .singular_values;
    Ok(sv.max())
}

pub fn nuclear_norm(m: &DMatrix<f64>) -> Result<f64> {
    Ok(svd(m)?.singular_values.sum())
}

/// Entrywise ℓ1 norm.
pub fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

/// Proximal operator of `tau·|x|`: `sign(x)·max(|x| − tau, 0)`.
#[inline]
pub fn soft_threshold(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Elementwise soft-thresholding.
pub fn shrink(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    m.map(|v| soft_threshold(v, tau))
}

/// Singular value thresholding, the proximal operator of `tau·‖·‖_*`:
/// `U · diag(max(σ − tau, 0)) · Vᵀ`. Only the surviving singular triplets are
/// multiplied back.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    debug_assert!(tau >= 0.0);
    Ok(svt_with_rank(m, tau)?.0)
}

/// As [`svt`], also returning how many singular values survived.
pub fn svt_with_rank(m: &DMatrix<f64>, tau: f64) -> Result<(DMatrix<f64>, usize)> {
    let f = svd(m)?;
    let kept = f.singular_values.iter().take_while(|s| **s > tau).count();
    if kept == 0 {
        return Ok((DMatrix::zeros(m.nrows(), m.ncols()), 0));
    }
    let mut us = f.u.columns(0, kept).into_owned();
    for k in 0..kept {
        us.column_mut(k).scale_mut(f.singular_values[k] - tau);
    }
    Ok((us * f.v.columns(0, kept).transpose(), kept))
}

/// A `d × r` column-orthonormal matrix spanning the stable subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    columns: DMatrix<f64>,
    /// The same entries, row-major, so `Aᵀx` is a sum of scaled rows.
    rows: Vec<f64>,
}

impl Basis {
    /// Accepts `columns` if `‖AᵀA − I‖_F ≤ 1e-9` and `1 ≤ r ≤ d`.
    pub fn new(columns: DMatrix<f64>) -> Result<Self> {
        let (d, r) = columns.shape();
        if r == 0 || r > d {
            return Err(RadError::InvalidConfig(format!(
                "basis must have 1 ≤ r ≤ d, got d={d}, r={r}"
            )));
        }
        if columns.iter().any(|v| !v.is_finite()) {
            return Err(RadError::InvalidConfig("basis has non-finite entries".into()));
        }
        let rows = columns.transpose().as_slice().to_vec();
        let b = Self { columns, rows };
        let err = b.orthonormality_error();
        if err > 1e-9 {
            return Err(RadError::InvalidConfig(format!(
                "basis columns are not orthonormal (‖AᵀA − I‖_F = {err:e})"
            )));
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.columns
    }

    pub fn orthonormality_error(&self) -> f64 {
        let r = self.rank();
        (self.columns.transpose() * &self.columns - DMatrix::identity(r, r)).norm()
    }

    /// `Aᵀx`, written into `coeffs` (length `r`).
    #[inline]
    pub fn coefficients_into(&self, x: &[f64], coeffs: &mut [f64]) {
        let r = self.rank();
        coeffs.fill(0.0);
        for (row, xj) in self.rows.chunks_exact(r).zip(x) {
            for (c, a) in coeffs.iter_mut().zip(row) {
                *c += a * xj;
            }
        }
    }

    /// `A(Aᵀx)` via two matrix-vector products; `coeffs` has length `r`, `out`
    /// length `d`.
    #[inline]
    pub fn project_into(&self, x: &[f64], coeffs: &mut [f64], out: &mut [f64]) {
        let d = self.dim();
        self.coefficients_into(x, coeffs);
        let a = self.columns.as_slice();
        out.fill(0.0);
        for (k, c) in coeffs.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(&a[k * d..(k + 1) * d]) {
                *o += c * v;
            }
        }
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(RadError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut coeffs = vec![0.0; self.rank()];
        let mut out = vec![0.0; self.dim()];
        self.project_into(x, &mut coeffs, &mut out);
        Ok(out)
    }
}

/// `Σ f(aᵢ, bᵢ)` over four interleaved partial sums, which breaks the add
/// dependency chain. The summation order is fixed, so results are
/// deterministic.
#[inline(always)]
fn sum4(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += f(x[k], y[k]);
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += f(*x, *y);
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    sum4(a, b, |x, y| (x - y) * (x - y))
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

/// Free-function form of [`Basis::project`].
pub fn project(basis: &Basis, x: &[f64]) -> Result<Vec<f64>> {
    basis.project(x)
}

/// Orthonormal basis of the numerical row space of `l`: the right singular
/// vectors whose singular values exceed `rank_tol · σ₁`. Each column's
/// largest-magnitude entry is made positive so the output is reproducible.
pub fn orthonormal_basis(l: &DMatrix<f64>, rank_tol: f64) -> Result<Basis> {
    if !(rank_tol > 0.0) {
        return Err(RadError::InvalidConfig(format!(
            "rank_tol must be positive, got {rank_tol}"
        )));
    }
    if l.is_empty() {
        return Err(RadError::DegenerateLowRank { sigma_max: 0.0 });
    }
    let f = svd(l)?;
    let sigma_max = f.singular_values.get(0).copied().unwrap_or(0.0);
    if !(sigma_max >= ZERO_FLOOR) {
        return Err(RadError::DegenerateLowRank { sigma_max });
    }
    let r = f
        .singular_values
        .iter()
        .take_while(|s| **s > rank_tol * sigma_max)
        .count();
    let mut cols = f.v.columns(0, r).into_owned();
    for mut col in cols.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0_f64, |best, v| {
            if v.abs() > best.abs() {
                v
            } else {
                best
            }
        });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    Basis::new(cols)
}

/// Modified Gram–Schmidt with one re-orthogonalization pass over the columns
/// of `vectors`. Columns whose residual falls to `drop_tol` times the largest
/// input column norm or below are discarded as dependent.
pub fn modified_gram_schmidt(vectors: &DMatrix<f64>, drop_tol: f64) -> DMatrix<f64> {
    let d = vectors.nrows();
    let scale = vectors
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    if scale == 0.0 {
        return DMatrix::zeros(d, 0);
    }
    for col in vectors.column_iter() {
        let mut w = col.into_owned();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let n = w.norm();
        if n > drop_tol * scale {
            basis.push(w / n);
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Largest principal angle (radians) between the column spans of two
/// column-orthonormal matrices. When the dimensions differ, measures how far
/// the smaller subspace sticks out of the larger one. Computed through sines
/// so small angles keep full precision.
pub fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(RadError::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let (big, small) = if a.ncols() >= b.ncols() { (a, b) } else { (b, a) };
    if small.ncols() == 0 {
        return Ok(0.0);
    }
    let residual = small - big * (big.transpose() * small);
    let sin = spectral_norm(&residual)?.min(1.0);
    Ok(sin.asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Singular values through the eigenvalues of MᵀM, a route independent of
    /// the Golub–Kahan SVD used by the implementation.
    fn oracle_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
        let gram = m.transpose() * m;
        let mut ev: Vec<f64> = SymmetricEigen::new(gram)
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ev
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(1.0, 1.0), 0.0);
        assert_eq!(soft_threshold(2.5, 0.0), 2.5);
    }

    #[test]
    fn svt_on_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 1.0]));
        let out = svt(&m, 2.0).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.0]));
        assert!((out - expected).norm() < 1e-12);
    }

    #[test]
    fn svt_with_zero_tau_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (n, d) in [(6, 4), (4, 6), (30, 5)] {
            let m = random_matrix(&mut rng, n, d);
            let out = svt(&m, 0.0).unwrap();
            assert!((out - &m).norm() <= 1e-10, "{n}x{d}");
        }
    }

    #[test]
    fn svt_matches_eigen_oracle_on_3x3() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 3, 3);
        let tau = 0.5;
        let out = svt(&m, tau).unwrap();

        let expected: Vec<f64> = oracle_singular_values(&m)
            .into_iter()
            .map(|s| (s - tau).max(0.0))
            .collect();
        let got = oracle_singular_values(&out);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() <= 1e-8, "got {got:?} expected {expected:?}");
        }

        // Same singular subspaces: rebuild from the oracle's eigenvectors of MᵀM.
        let eig = SymmetricEigen::new(m.transpose() * &m);
        let mut rebuilt = DMatrix::zeros(3, 3);
        for k in 0..3 {
            let s = eig.eigenvalues[k].max(0.0).sqrt();
            if s > tau {
                let v = eig.eigenvectors.column(k);
                let u = &m * v / s;
                rebuilt += (s - tau) * &u * v.transpose();
            }
        }
        assert!((rebuilt - out).norm() <= 1e-8);
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (n, d) in [(50, 8), (8, 50), (12, 12)] {
            let m = random_matrix(&mut rng, n, d);
            let f = svd(&m).unwrap();
            assert!((f.reconstruct() - &m).norm() <= 1e-8 * m.norm());
            let k = n.min(d);
            assert!((f.u.transpose() * &f.u - DMatrix::identity(k, k)).norm() < 1e-10);
            assert!((f.v.transpose() * &f.v - DMatrix::identity(k, k)).norm() < 1e-10);
            assert!(f
                .singular_values
                .as_slice()
                .windows(2)
                .all(|w| w[0] >= w[1] && w[1] >= 0.0));
        }
    }

    #[test]
    fn svd_of_repeated_rows() {
        let x0 = [2.0, -1.0, 0.5, 3.0];
        let m = DMatrix::from_fn(12, 4, |_, j| x0[j]);
        let f = svd(&m).unwrap();
        let expected = 12f64.sqrt() * x0.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((f.singular_values[0] - expected).abs() < 1e-12);
        assert!((f.reconstruct() - &m).norm() < 1e-12);
    }

    #[test]
    fn basis_of_repeated_row() {
        let l = DMatrix::from_fn(5, 3, |_, j| if j < 2 { 1.0 } else { 0.0 });
        let b = orthonormal_basis(&l, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.rank(), 1);
        let s = 1.0 / 2f64.sqrt();
        let col = b.matrix().column(0);
        assert!((col[0] - s).abs() < 1e-12 && (col[1] - s).abs() < 1e-12 && col[2].abs() < 1e-12);
    }

    #[test]
    fn basis_of_identity_spans_everything() {
        let b = orthonormal_basis(&DMatrix::identity(3, 3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.rank(), 3);
        let x = [0.3, -2.0, 7.5];
        let p = b.project(&x).unwrap();
        for (a, e) in p.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_of_planted_rank_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let u1 = random_matrix(&mut rng, 50, 1);
        let u2 = random_matrix(&mut rng, 50, 1);
        let v1 = random_matrix(&mut rng, 10, 1);
        let v2 = random_matrix(&mut rng, 10, 1);
        let l = &u1 * v1.transpose() + &u2 * v2.transpose();
        let b = orthonormal_basis(&l, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.rank(), 2);
        assert!(b.orthonormality_error() <= 1e-9);
        for i in 0..l.nrows() {
            let w: Vec<f64> = l.row(i).iter().copied().collect();
            let p = b.project(&w).unwrap();
            assert!(distance(&p, &w) <= 1e-8);
        }
        // Gram–Schmidt on the rows spans the same subspace.
        let gs = modified_gram_schmidt(&l.transpose(), 1e-9);
        assert_eq!(gs.ncols(), 2);
        assert!(max_principal_angle(b.matrix(), &gs).unwrap() <= 1e-8);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let err = orthonormal_basis(&DMatrix::zeros(4, 3), DEFAULT_RANK_TOL).unwrap_err();
        assert!(matches!(err, RadError::DegenerateLowRank { .. }));
        assert!(err.to_string().contains("degenerate low-rank matrix"));
    }

    #[test]
    fn projection_examples() {
        let cols = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let b = Basis::new(cols).unwrap();
        assert_eq!(b.project(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 0.0]);
        assert_eq!(b.project(&[4.0, -1.0, 0.0]).unwrap(), vec![4.0, -1.0, 0.0]);
        assert_eq!(b.project(&[0.0, 0.0, 9.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(matches!(
            b.project(&[1.0, 2.0]),
            Err(RadError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn basis_rejects_non_orthonormal() {
        let cols = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        assert!(Basis::new(cols).is_err());
        assert!(Basis::new(DMatrix::zeros(3, 0)).is_err());
    }

    #[test]
    fn data_matrix_validation() {
        assert!(matches!(
            DataMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 0.0]),
            Err(RadError::NonFinite { row: 0, col: 1 })
        ));
        assert!(DataMatrix::from_rows(&[]).is_err());
        assert!(DataMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
        let m = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.row(1), vec![3.0, 4.0]);
    }

    #[test]
    fn principal_angle_of_rotated_plane() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let t: f64 = 1e-7;
        let b = DMatrix::from_column_slice(3, 1, &[t.cos(), t.sin(), 0.0]);
        let angle = max_principal_angle(&a, &b).unwrap();
        assert!((angle - t).abs() < 1e-15);
    }
}
