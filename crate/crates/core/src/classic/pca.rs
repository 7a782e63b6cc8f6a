use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::linalg::{covariance, symmetric_eigen};

/// Principal-component basis learned from training frames.
///
/// `components` holds one orthonormal row per retained component, ordered by
/// decreasing explained variance. Each row is sign-normalised so that its
/// largest-magnitude entry is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    pub components: Array2<f64>,
    /// Population variance of the training data along each component.
    pub explained_variance: Array1<f64>,
    /// Total population variance of the training data (trace of the covariance).
    pub total_variance: f64,
}

impl PcaModel {
    pub fn fit(train: ArrayView2<'_, f64>, n_components: usize) -> Result<Self> {
        let (n, d) = train.dim();
        if n_components == 0 || n_components > n.min(d) {
            return Err(Error::config(format!(
                "n_components = {n_components} outside 1..={} for a {n}x{d} matrix",
                n.min(d)
            )));
        }
        let (mean, cov) = covariance(train, 0);
        let total_variance = cov.diag().sum();
        let (values, vectors) = symmetric_eigen(cov.view());
        let mut components = vectors.slice_axis(Axis(0), (0..n_components).into()).to_owned();
        for mut row in components.rows_mut() {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if v.abs() > row[best].abs() {
                    best = j;
                }
            }
            if row[best] < 0.0 {
                row.mapv_inplace(|v| -v);
            }
        }
        let explained_variance = values.slice_axis(Axis(0), (0..n_components).into()).mapv(|v| v.max(0.0));
        Ok(PcaModel { mean, components, explained_variance, total_variance })
    }

    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    /// Variance left out of the retained subspace.
    pub fn discarded_variance(&self) -> f64 {
        (self.total_variance - self.explained_variance.sum()).max(0.0)
    }

    pub fn project(&self, frame: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if frame.len() != self.input_dim() {
            return Err(Error::shape(format!("frame has {} values, PCA expects {}", frame.len(), self.input_dim())));
        }
        Ok(self.components.dot(&(&frame - &self.mean)))
    }

    pub fn reconstruct(&self, coeffs: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if coeffs.len() != self.n_components() {
            return Err(Error::shape(format!(
                "{} coefficients for a {}-component model",
                coeffs.len(),
                self.n_components()
            )));
        }
        Ok(self.components.t().dot(&coeffs) + &self.mean)
    }

    /// Projects every row of `frames`.
    pub fn project_rows(&self, frames: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if frames.ncols() != self.input_dim() {
            return Err(Error::shape(format!("frames have {} columns, PCA expects {}", frames.ncols(), self.input_dim())));
        }
        Ok((&frames - &self.mean).dot(&self.components.t()))
    }

    pub fn reconstruct_rows(&self, coeffs: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if coeffs.ncols() != self.n_components() {
            return Err(Error::shape(format!(
                "{} coefficient columns for a {}-component model",
                coeffs.ncols(),
                self.n_components()
            )));
        }
        Ok(coeffs.dot(&self.components) + &self.mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::Rng;

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::seeded(seed);
        Array2::from_shape_fn((n, d), |(_, j)| rng.random_range(-1.0..1.0) * (1.0 + j as f64))
    }

    #[test]
    fn line_y_equals_x() {
        let data = array![[-2.0, -2.0], [-1.0, -1.0], [0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        let pca = PcaModel::fit(data.view(), 2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((pca.components[[0, 0]].abs() - r).abs() < 1e-12);
        assert!((pca.components[[0, 1]].abs() - r).abs() < 1e-12);
        assert!(pca.explained_variance[1].abs() < 1e-12);
    }

    #[test]
    fn full_basis_round_trip() {
        let data = random(40, 6, 1);
        let pca = PcaModel::fit(data.view(), 6).unwrap();
        let back = pca.reconstruct_rows(pca.project_rows(data.view()).unwrap().view()).unwrap();
        for (a, b) in back.iter().zip(data.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn mean_projects_to_zero() {
        let data = random(30, 5, 2);
        let pca = PcaModel::fit(data.view(), 3).unwrap();
        let z = pca.project(pca.mean.view()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn sign_convention() {
        let data = random(50, 8, 3);
        let pca = PcaModel::fit(data.view(), 4).unwrap();
        for row in pca.components.rows() {
            let max = row.iter().cloned().fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a });
            assert!(max > 0.0);
        }
    }

    #[test]
    fn discarded_variance_matches_reconstruction_mse() {
        let data = random(60, 7, 4);
        for k in 1..=7 {
            let pca = PcaModel::fit(data.view(), k).unwrap();
            let back = pca.reconstruct_rows(pca.project_rows(data.view()).unwrap().view()).unwrap();
            let mse = (&back - &data).mapv(|v| v * v).mean().unwrap();
            assert!((mse - pca.discarded_variance() / 7.0).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn bad_component_count() {
        let data = random(5, 3, 5);
        assert!(matches!(PcaModel::fit(data.view(), 0), Err(Error::Config(_))));
        assert!(matches!(PcaModel::fit(data.view(), 4), Err(Error::Config(_))));
        let pca = PcaModel::fit(data.view(), 2).unwrap();
        assert!(matches!(pca.project(array![1.0, 2.0].view()), Err(Error::Shape(_))));
        assert!(matches!(pca.reconstruct(array![1.0].view()), Err(Error::Shape(_))));
    }
}
