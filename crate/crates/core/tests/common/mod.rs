//! Independent reference implementations shared by the test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Population covariance eigenpairs via nalgebra, sorted by decreasing
/// eigenvalue; eigenvectors are returned as rows.
pub fn eigen_oracle(data: ArrayView2<'_, f64>) -> (Vec<f64>, Array2<f64>) {
    let (n, d) = data.dim();
    let mean: Vec<f64> = (0..d).map(|j| data.column(j).sum() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| data[[i, j]] - mean[j]);
    let cov = centered.transpose() * &centered / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = Array2::from_shape_fn((d, d), |(r, c)| eig.eigenvectors[(c, order[r])]);
    (values, vectors)
}

/// Minimum mean squared error of any `levels`-level quantiser of `samples`,
/// by dynamic programming over contiguous cells of the sorted samples.
pub fn optimal_scalar_mse(samples: &[f64], levels: usize) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let mut s1 = vec![0.0; n + 1];
    let mut s2 = vec![0.0; n + 1];
    for i in 0..n {
        s1[i + 1] = s1[i] + x[i];
        s2[i + 1] = s2[i] + x[i] * x[i];
    }
    let sse = |a: usize, b: usize| {
        let c = (b - a) as f64;
        let s = s1[b] - s1[a];
        (s2[b] - s2[a] - s * s / c).max(0.0)
    };
    let mut cost = vec![f64::INFINITY; n + 1];
    cost[0] = 0.0;
    for _ in 0..levels.min(n) {
        let mut next = vec![f64::INFINITY; n + 1];
        next[0] = 0.0;
        #[allow(clippy::needless_range_loop)]
        for b in 1..=n {
            let mut best = cost[b];
            for a in 0..b {
                if cost[a].is_finite() {
                    best = best.min(cost[a] + sse(a, b));
                }
            }
            next[b] = best;
        }
        cost = next;
    }
    cost[n] / n as f64
}

/// Index of the nearest row of `codebook` (lowest index on ties).
pub fn brute_nearest(codebook: ArrayView2<'_, f64>, q: ArrayView1<'_, f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (j, c) in codebook.outer_iter().enumerate() {
        let d: f64 = c.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.1 {
            best = (j, d);
        }
    }
    best.0
}

/// Threshold maximising positive-class F1 with prediction `feature > t`,
/// scanning every midpoint by direct counting; smallest wins ties.
pub fn brute_threshold(samples: &[(f64, bool)]) -> (f64, f64) {
    let mut values: Vec<f64> = samples.iter().map(|s| s.0).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut best = (f64::NAN, -1.0);
    for w in values.windows(2) {
        let t = 0.5 * (w[0] + w[1]);
        let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
        for &(v, pos) in samples {
            match (v > t, pos) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                _ => {}
            }
        }
        let f1 = if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fn_) };
        if f1 > best.1 {
            best = (t, f1);
        }
    }
    best
}

/// Mean over columns of the n−1 sample standard deviation, two-pass.
pub fn a_star_oracle(window: ArrayView2<'_, f64>) -> f64 {
    let n = window.nrows() as f64;
    let sds: Array1<f64> = window.columns().into_iter().map(|c| {
        let m = c.sum() / n;
        (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }).collect();
    sds.mean().unwrap()
}
