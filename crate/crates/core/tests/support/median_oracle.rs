//! Brute-force geometric median in the plane: a coarse grid over the bounding
//! box, zooming grid refinement, then normalized subgradient descent with
//! backtracking. Shares no code with the Weiszfeld implementation.

pub fn objective(points: &[[f64; 2]], y: [f64; 2]) -> f64 {
    points
        .iter()
        .map(|p| ((p[0] - y[0]).powi(2) + (p[1] - y[1]).powi(2)).sqrt())
        .sum()
}

/// Minimum-norm subgradient of the objective at `y`.
fn subgradient(points: &[[f64; 2]], y: [f64; 2], scale: f64) -> [f64; 2] {
    let mut g = [0.0, 0.0];
    let mut coincident = 0.0;
    for p in points {
        let (dx, dy) = (y[0] - p[0], y[1] - p[1]);
        let r = (dx * dx + dy * dy).sqrt();
        if r <= 1e-14 * scale {
            coincident += 1.0;
        } else {
            g[0] += dx / r;
            g[1] += dy / r;
        }
    }
    let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if coincident > 0.0 {
        if norm <= coincident {
            return [0.0, 0.0];
        }
        let k = 1.0 - coincident / norm;
        return [g[0] * k, g[1] * k];
    }
    g
}

/// Returns `(minimum objective, minimizer)`.
pub fn brute_force_median(points: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);

    let mut best = lo;
    let mut best_f = f64::INFINITY;
    let steps = 200;
    for i in 0..=steps {
        for j in 0..=steps {
            let y = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / steps as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / steps as f64,
            ];
            let f = objective(points, y);
            if f < best_f {
                best_f = f;
                best = y;
            }
        }
    }
    // Every data point is a candidate too; the optimum often sits on one.
    for p in points {
        let f = objective(points, *p);
        if f < best_f {
            best_f = f;
            best = *p;
        }
    }

    let mut radius = scale / steps as f64;
    for _ in 0..30 {
        let center = best;
        for i in -10..=10 {
            for j in -10..=10 {
                let y = [center[0] + radius * i as f64 / 10.0, center[1] + radius * j as f64 / 10.0];
                let f = objective(points, y);
                if f < best_f {
                    best_f = f;
                    best = y;
                }
            }
        }
        radius *= 0.5;
    }

    let mut step = scale * 1e-3;
    while step > 1e-15 * scale {
        let g = subgradient(points, best, scale);
        let norm = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if norm == 0.0 {
            break;
        }
        let y = [best[0] - step * g[0] / norm, best[1] - step * g[1] / norm];
        let f = objective(points, y);
        if f < best_f {
            best_f = f;
            best = y;
            step *= 1.5;
        } else {
            step *= 0.5;
        }
    }
    (best_f, best)
}
