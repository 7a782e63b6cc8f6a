//! Small dense linear-algebra helpers.

use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching unit eigenvectors
/// as rows of the second matrix.
pub fn symmetric_eigen(matrix: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    let mut a = matrix.to_owned();
    let mut v = Array2::<f64>::eye(n);

    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a[[p, q]] * a[[p, q]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[[p, q]];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps index order among equal eigenvalues.
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).unwrap_or(std::cmp::Ordering::Equal));
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let vectors = v.select(Axis(1), &order).reversed_axes();
    (values, vectors.as_standard_layout().to_owned())
}

/// Column means and covariance of `data` (rows = samples) with divisor
/// `n - ddof`.
pub fn covariance(data: ArrayView2<'_, f64>, ddof: usize) -> (Array1<f64>, Array2<f64>) {
    let n = data.nrows();
    let mean = data.mean_axis(Axis(0)).expect("covariance of empty matrix");
    let centered = &data - &mean;
    let denom = n.saturating_sub(ddof).max(1) as f64;
    let cov = centered.t().dot(&centered) / denom;
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_matrix() {
        let m = array![[1.0, 0.0], [0.0, 3.0]];
        let (vals, vecs) = symmetric_eigen(m.view());
        assert_eq!(vals.to_vec(), vec![3.0, 1.0]);
        assert!((vecs[[0, 1]].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reconstructs_matrix() {
        let m = array![[4.0, 1.0, 0.5], [1.0, 3.0, -0.2], [0.5, -0.2, 1.0]];
        let (vals, vecs) = symmetric_eigen(m.view());
        let rebuilt = vecs.t().dot(&Array2::from_diag(&vals)).dot(&vecs);
        for (a, b) in rebuilt.iter().zip(m.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let gram = vecs.dot(&vecs.t());
        for ((i, j), g) in gram.indexed_iter() {
            let e = if i == j { 1.0 } else { 0.0 };
            assert!((g - e).abs() < 1e-12);
        }
    }
}
