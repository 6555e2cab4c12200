use nalgebra::DMatrix;
use rad_core::fixtures::{entry_stdev, planted_low_rank, rng, sparse_corruption, PlantedSystem};
use rad_core::linalg::{max_principal_angle, modified_gram_schmidt, orthonormal_basis, DEFAULT_RANK_TOL};
use rad_core::{
    pcp_decompose, train, train_pca_baseline, train_with_report, DataMatrix, PcpConfig, ThresholdMode,
    TrainConfig, Verdict,
};
use rand::Rng;

/// Rows are combinations of two fixed flat-magnitude vectors.
fn clean_rank_two(n: usize, d: usize, seed: u64) -> (DataMatrix, DMatrix<f64>) {
    let mut g = rng(seed);
    let mut flat = |k: usize| -> Vec<f64> {
        (0..k)
            .map(|_| {
                let mag = g.random_range(1.0..2.0);
                if g.random::<bool>() { mag } else { -mag }
            })
            .collect()
    };
    let v1 = flat(d);
    let v2 = flat(d);
    let a = flat(n);
    let b = flat(n);
    let m = DMatrix::from_fn(n, d, |i, j| a[i] * v1[j] + b[i] * v2[j]);
    let span = DMatrix::from_fn(d, 2, |j, k| if k == 0 { v1[j] } else { v2[j] });
    (DataMatrix::new(m).unwrap(), modified_gram_schmidt(&span, 1e-12))
}

#[test]
fn planted_pcp_recovery() {
    let mut g = rng(7);
    let (n, d) = (200, 50);
    let p = planted_low_rank(&mut g, n, d, 2);
    let s0 = sparse_corruption(&mut g, n, d, 0.05, 5.0 * entry_stdev(&p.matrix));
    let m = DataMatrix::new(&p.matrix + &s0).unwrap();
    let cfg = PcpConfig { lambda: Some(1.0 / (n as f64).sqrt()), tol: 1e-7, ..Default::default() };
    let res = pcp_decompose(&m, &cfg).unwrap();
    assert!(res.converged);
    let err = (&res.low_rank - &p.matrix).norm() / p.matrix.norm();
    assert!(err <= 1e-4, "relative error {err}");
    assert!(res.final_residual() <= 1e-7 * m.frobenius_norm());
    assert!(*res.residual_history.last().unwrap() <= res.residual_history[0] * 1e-6);
}

#[test]
fn clean_rank_two_training_contains_every_row() {
    let (m, truth) = clean_rank_two(500, 20, 11);
    for mode in [ThresholdMode::ProjectedRows, ThresholdMode::LowRankRows] {
        let cfg = TrainConfig { threshold_mode: mode, ..Default::default() };
        let report = train_with_report(&m, &cfg).unwrap();
        let model = &report.model;
        assert_eq!(model.rank(), 2);
        assert!(report.pcp.sparse.norm() <= 1e-6 * m.frobenius_norm());
        assert!(max_principal_angle(model.basis().matrix(), &truth).unwrap() <= 1e-6);
        let slack = if mode == ThresholdMode::ProjectedRows { 0.0 } else { 1e-8 };
        for rec in model.score_batch(&m).unwrap() {
            assert!(rec.score <= model.threshold() + slack, "{mode}: {} > {}", rec.score, model.threshold());
            assert_eq!(rec.verdict, Verdict::Normal);
        }
    }
}

#[test]
fn baseline_matches_rad_on_clean_data() {
    let (m, _) = clean_rank_two(500, 20, 12);
    let rad = train(&m, &TrainConfig::default()).unwrap();
    let pca = train_pca_baseline(&m, DEFAULT_RANK_TOL).unwrap();
    assert!(pca.provenance().baseline);
    assert!(pca.provenance().pcp.is_none());
    assert_eq!(pca.threshold_mode(), ThresholdMode::ProjectedRows);
    assert!(max_principal_angle(rad.basis().matrix(), pca.basis().matrix()).unwrap() <= 1e-6);
}

#[test]
fn identical_rows_give_zero_threshold() {
    let x0 = [3.0, -1.0, 2.5, 0.25];
    let rows: Vec<Vec<f64>> = (0..30).map(|_| x0.to_vec()).collect();
    let m = DataMatrix::from_rows(&rows).unwrap();
    for model in [train(&m, &TrainConfig::default()).unwrap(), train_pca_baseline(&m, DEFAULT_RANK_TOL).unwrap()] {
        assert_eq!(model.rank(), 1);
        assert_eq!(model.threshold(), 0.0);
        for (a, b) in model.median().iter().zip(x0) {
            assert!((a - b).abs() <= 1e-9);
        }
        let r = model.classify(0, &x0).unwrap();
        assert_eq!(r.verdict, Verdict::Normal);
        let mut off = x0.to_vec();
        off[0] += 1e-3;
        let r = model.classify(1, &off).unwrap();
        assert_eq!(r.verdict, Verdict::Anomaly);
        assert!(r.normalized.is_infinite());
    }
}

#[test]
fn planted_row_spans_recovered() {
    for (seed, n, d, r) in [(1, 60, 10, 1), (2, 80, 25, 3), (3, 200, 40, 5)] {
        let p = planted_low_rank(&mut rng(seed), n, d, r);
        let b = orthonormal_basis(&p.matrix, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(b.rank(), r);
        assert!(max_principal_angle(b.matrix(), &p.row_space).unwrap() <= 1e-6);
    }
}

#[test]
fn rad_subspace_closer_than_baseline_under_bursts() {
    let mut g = rng(21);
    let sys = PlantedSystem::new(&mut g, 20, vec![5.0, -3.0], vec![4.0, 2.0]);
    let clean = sys.sample(&mut g, 600);
    let mut polluted = clean.clone();
    for col in [2, 9] {
        let sd = column_stdev(&clean, col);
        for i in (0..600).step_by(25) {
            polluted[(i, col)] += 10.0 * sd;
        }
    }
    let m = DataMatrix::new(polluted).unwrap();
    let rad = train(&m, &TrainConfig::default()).unwrap();
    let pca = train_pca_baseline(&m, 1e-3).unwrap();
    let lead = |b: &DMatrix<f64>| b.columns(0, 2).into_owned();
    let rad_angle = max_principal_angle(&lead(rad.basis().matrix()), &sys.subspace).unwrap();
    let pca_angle = max_principal_angle(&lead(pca.basis().matrix()), &sys.subspace).unwrap();
    assert!(pca_angle > rad_angle, "baseline {pca_angle} vs rad {rad_angle}");
}

fn column_stdev(m: &DMatrix<f64>, j: usize) -> f64 {
    let col = m.column(j);
    let mean = col.mean();
    (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() as f64 - 1.0)).sqrt()
}
