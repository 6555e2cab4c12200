#[path = "support/median_oracle.rs"]
mod median_oracle_support;

use nalgebra::DMatrix;
use rad_core::fixtures::rng;
use rad_core::{geometric_median, MedianConfig};
use rand::Rng;
use median_oracle_support::{brute_force_median, objective};

fn as_matrix(points: &[[f64; 2]]) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), 2, |i, j| points[i][j])
}

#[test]
fn weiszfeld_matches_brute_force_on_random_instances() {
    let mut g = rng(2024);
    for case in 0..25 {
        let n = g.random_range(3..=20);
        let mut points: Vec<[f64; 2]> = (0..n)
            .map(|_| [g.random_range(-10.0..10.0), g.random_range(-10.0..10.0)])
            .collect();
        if case % 3 == 0 {
            // heavy point: optimum sits on a data point
            let p = points[0];
            for k in 1..n / 2 {
                points[k] = p;
            }
        }
        let ours = geometric_median(&as_matrix(&points), &MedianConfig::default()).unwrap();
        let (oracle_f, _) = brute_force_median(&points);
        let f = objective(&points, [ours.point[0], ours.point[1]]);
        assert!((f - oracle_f).abs() <= 1e-6, "case {case}: {f} vs oracle {oracle_f}");
        assert!((ours.objective - f).abs() <= 1e-9);
    }
}

#[test]
fn symmetric_fixtures_are_exact() {
    let square = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
    let m = geometric_median(&as_matrix(&square), &MedianConfig::default()).unwrap();
    assert!((m.point[0] - 0.5).abs() <= 1e-8 && (m.point[1] - 0.5).abs() <= 1e-8);

    let h = 3f64.sqrt() / 2.0;
    let triangle = [[0.0, 0.0], [1.0, 0.0], [0.5, h]];
    let m = geometric_median(&as_matrix(&triangle), &MedianConfig::default()).unwrap();
    assert!((m.point[0] - 0.5).abs() <= 1e-8);
    assert!((m.point[1] - h / 3.0).abs() <= 1e-8, "{:?}", m.point);
}

#[test]
fn output_in_convex_hull_of_planar_sets() {
    let mut g = rng(99);
    for _ in 0..20 {
        let n = g.random_range(3..=15);
        let points: Vec<[f64; 2]> = (0..n)
            .map(|_| [g.random_range(-5.0..5.0), g.random_range(-5.0..5.0)])
            .collect();
        let m = geometric_median(&as_matrix(&points), &MedianConfig::default()).unwrap();
        assert!(in_hull(&points, [m.point[0], m.point[1]]));
    }
}

/// Point-in-convex-hull via monotone-chain hull and edge orientation tests.
fn in_hull(points: &[[f64; 2]], y: [f64; 2]) -> bool {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], y) >= -1e-9)
}
