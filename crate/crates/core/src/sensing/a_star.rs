use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Scalar motion feature of one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowFeature {
    /// Mean over subcarriers of the per-subcarrier sample standard deviation.
    pub a_star: f64,
}

/// A* of a `length × D` window: the sample standard deviation (divisor
/// `n − 1`) of every subcarrier over the window, averaged over subcarriers.
pub fn compute_a_star(window: ArrayView2<'_, f64>) -> Result<WindowFeature> {
    let (n, d) = window.dim();
    if n < 2 {
        return Err(Error::InsufficientData(format!("A* needs at least 2 frames, window has {n}")));
    }
    if d == 0 {
        return Err(Error::InsufficientData("A* needs at least one subcarrier".into()));
    }
    let mut total = 0.0;
    for col in window.columns() {
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        total += (ss / (n - 1) as f64).sqrt();
    }
    Ok(WindowFeature { a_star: total / d as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn constant_window_is_zero() {
        let w = Array2::from_elem((64, 56), 3.5);
        assert_eq!(compute_a_star(w.view()).unwrap().a_star, 0.0);
    }

    #[test]
    fn two_point_std() {
        let w = array![[0.0], [2.0]];
        assert!((compute_a_star(w.view()).unwrap().a_star - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn single_frame_rejected() {
        assert!(matches!(compute_a_star(array![[1.0, 2.0]].view()), Err(Error::InsufficientData(_))));
    }
}
