//! Synthetic low-rank-plus-sparse data with known ground truth, for tests,
//! benchmarks and experiments.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

/// Orthonormal basis (`d × r`) of a random Gaussian `d × r` matrix.
pub fn random_orthonormal<R: Rng>(rng: &mut R, d: usize, r: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, d, r);
    g.qr().q().columns(0, r).into_owned()
}

/// A planted rank-`r` matrix `U·Vᵀ` with standard normal factors, plus an
/// orthonormal basis of its row space.
pub struct PlantedLowRank {
    pub matrix: DMatrix<f64>,
    pub row_space: DMatrix<f64>,
}

pub fn planted_low_rank<R: Rng>(rng: &mut R, n: usize, d: usize, r: usize) -> PlantedLowRank {
    let u = gaussian_matrix(rng, n, r);
    let v = gaussian_matrix(rng, d, r);
    PlantedLowRank {
        matrix: &u * v.transpose(),
        row_space: v.qr().q().columns(0, r).into_owned(),
    }
}

/// Each entry independently nonzero with probability `fraction`, with value
/// `±magnitude` (fair sign).
pub fn sparse_corruption<R: Rng>(
    rng: &mut R,
    n: usize,
    d: usize,
    fraction: f64,
    magnitude: f64,
) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| {
        if rng.random::<f64>() < fraction {
            if rng.random::<bool>() {
                magnitude
            } else {
                -magnitude
            }
        } else {
            0.0
        }
    })
}

/// Sample standard deviation over all entries.
pub fn entry_stdev(m: &DMatrix<f64>) -> f64 {
    let n = m.len() as f64;
    let mean = m.mean();
    (m.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// A stable system whose state vectors live on an affine-free subspace:
/// `x = Q·(c + s ⊙ f)` with `f ~ N(0, I_r)`, an operating point `c` and
/// per-factor spreads `s`.
pub struct PlantedSystem {
    pub subspace: DMatrix<f64>,
    pub operating_point: Vec<f64>,
    pub spreads: Vec<f64>,
}

impl PlantedSystem {
    pub fn new<R: Rng>(rng: &mut R, d: usize, operating_point: Vec<f64>, spreads: Vec<f64>) -> Self {
        assert_eq!(operating_point.len(), spreads.len());
        Self {
            subspace: random_orthonormal(rng, d, spreads.len()),
            operating_point,
            spreads,
        }
    }

    pub fn dim(&self) -> usize {
        self.subspace.nrows()
    }

    pub fn rank(&self) -> usize {
        self.subspace.ncols()
    }

    /// `n × d` matrix of clean state vectors.
    pub fn sample<R: Rng>(&self, rng: &mut R, n: usize) -> DMatrix<f64> {
        let r = self.rank();
        let factors = DMatrix::from_fn(n, r, |_, k| {
            self.operating_point[k] + self.spreads[k] * rng.sample::<f64, _>(StandardNormal)
        });
        factors * self.subspace.transpose()
    }
}
