use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::{CsiDataset, CsiFrame, FrameValues, Samples};
use crate::error::{Error, Result};

/// Per-subcarrier modulus of a frame. Amplitude frames are returned unchanged.
pub fn extract_amplitude(frame: &CsiFrame) -> Vec<f64> {
    match &frame.values {
        FrameValues::Complex(v) => v.iter().map(|z| z.norm()).collect(),
        FrameValues::Amplitude(v) => v.clone(),
    }
}

/// Guard subcarriers of a 64-point, 20 MHz OFDM symbol in FFT index order:
/// DC (0) and the band-edge nulls (29..=35). Leaves 56 subcarriers.
const GUARDS_20MHZ: [usize; 8] = [0, 29, 30, 31, 32, 33, 34, 35];

/// Retain mask used when the caller gives none: drops DC and edge guards for
/// 64-subcarrier captures, keeps everything otherwise.
pub fn default_retain_mask(width: usize) -> Vec<bool> {
    let mut mask = vec![true; width];
    if width == 64 {
        for &g in &GUARDS_20MHZ {
            mask[g] = false;
        }
    }
    mask
}

/// Drops the subcarriers flagged as guards in the dataset metadata, or the
/// [`default_retain_mask`] when none are flagged.
pub fn informative_mask(dataset: &CsiDataset) -> Vec<bool> {
    if dataset.meta.guard_mask.iter().any(|&g| g) {
        dataset.meta.guard_mask.iter().map(|&g| !g).collect()
    } else {
        default_retain_mask(dataset.width())
    }
}

/// Keeps the subcarriers whose `retain` entry is true, preserving their order.
pub fn filter_subcarriers(dataset: &CsiDataset, retain: &[bool]) -> Result<CsiDataset> {
    let w = dataset.width();
    if retain.len() != w {
        return Err(Error::shape(format!("mask has {} entries for W={w}", retain.len())));
    }
    let keep: Vec<usize> = (0..w).filter(|&i| retain[i]).collect();
    if keep.is_empty() {
        return Err(Error::EmptySelection);
    }
    let samples = match &dataset.samples {
        Samples::Complex(m) => Samples::Complex(m.select(Axis(1), &keep)),
        Samples::Amplitude(m) => Samples::Amplitude(m.select(Axis(1), &keep)),
    };
    let mut meta = dataset.meta.clone();
    meta.subcarrier_count = keep.len();
    meta.guard_mask = keep.iter().map(|&i| dataset.meta.guard_mask[i]).collect();
    meta.source_indices = keep.iter().map(|&i| dataset.meta.source_indices[i]).collect();
    Ok(CsiDataset {
        timestamps: dataset.timestamps.clone(),
        samples,
        labels: dataset.labels.clone(),
        class_names: dataset.class_names.clone(),
        meta,
    })
}

/// Per-column z-score transform fit on training data.
///
/// Uses the population standard deviation, so transformed training columns
/// have unit variance. Constant columns get `std = 1` and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
    pub constant: Vec<bool>,
}

impl Normalizer {
    pub fn fit(train: ArrayView2<'_, f64>) -> Result<Self> {
        let n = train.nrows();
        if n == 0 {
            return Err(Error::EmptyResult("cannot fit a normaliser on zero frames".into()));
        }
        let mean = train.mean_axis(Axis(0)).expect("non-empty");
        let mut std = Array1::zeros(train.ncols());
        let mut constant = vec![false; train.ncols()];
        for (j, col) in train.axis_iter(Axis(1)).enumerate() {
            let m = mean[j];
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            let s = var.sqrt();
            if s > 1e-12 * m.abs().max(1.0) {
                std[j] = s;
            } else {
                std[j] = 1.0;
                constant[j] = true;
            }
        }
        Ok(Normalizer { mean, std, constant })
    }

    pub fn fit_dataset(train: &CsiDataset) -> Result<Self> {
        match train.amplitude_view() {
            Some(v) => Normalizer::fit(v),
            None => Normalizer::fit(train.amplitudes().view()),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn has_constant_columns(&self) -> bool {
        self.constant.iter().any(|&c| c)
    }

    pub fn apply(&self, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(data.ncols())?;
        Ok((&data - &self.mean) / &self.std)
    }

    pub fn invert(&self, data: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check(data.ncols())?;
        Ok(&data * &self.std + &self.mean)
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(self.std.iter()))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    /// Normalised copy of an amplitude dataset.
    pub fn apply_dataset(&self, dataset: &CsiDataset) -> Result<CsiDataset> {
        let amps = dataset.amplitudes();
        let normalized = self.apply(amps.view())?;
        let mut out = dataset.clone();
        out.samples = Samples::Amplitude(normalized);
        Ok(out)
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.dim() {
            return Err(Error::shape(format!("normaliser fit on {} columns, got {cols}", self.dim())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::DatasetMeta;
    use ndarray::array;
    use num_complex::Complex64;
    use rand::Rng;

    #[test]
    fn pythagorean_amplitude() {
        let f = CsiFrame {
            timestamp: 0.0,
            values: FrameValues::Complex(vec![Complex64::new(3.0, 4.0), Complex64::new(0.0, 0.0)]),
        };
        assert_eq!(extract_amplitude(&f), vec![5.0, 0.0]);
    }

    #[test]
    fn amplitude_matches_elementwise_sqrt() {
        let mut rng = crate::rng::seeded(3);
        let v: Vec<Complex64> = (0..200)
            .map(|_| Complex64::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect();
        let f = CsiFrame { timestamp: 0.0, values: FrameValues::Complex(v.clone()) };
        let amp = extract_amplitude(&f);
        for (a, z) in amp.iter().zip(&v) {
            let oracle = (z.re * z.re + z.im * z.im).sqrt();
            assert!((a - oracle).abs() <= 1e-12);
        }
        // idempotent on real data
        let again = extract_amplitude(&CsiFrame { timestamp: 0.0, values: FrameValues::Amplitude(amp.clone()) });
        assert_eq!(again, amp);
    }

    #[test]
    fn default_mask_leaves_56() {
        let m = default_retain_mask(64);
        assert_eq!(m.iter().filter(|&&b| b).count(), 56);
        assert_eq!(default_retain_mask(2048).iter().filter(|&&b| b).count(), 2048);
    }

    fn dataset(w: usize, n: usize) -> CsiDataset {
        let amps = Array2::from_shape_fn((n, w), |(i, j)| (i * w + j) as f64);
        CsiDataset::from_amplitudes(amps, vec![0; n], DatasetMeta::new(w, 10.0, 20)).unwrap()
    }

    #[test]
    fn filter_64_to_56() {
        let ds = dataset(64, 3);
        let out = filter_subcarriers(&ds, &default_retain_mask(64)).unwrap();
        assert_eq!(out.width(), 56);
        assert_eq!(out.meta.subcarrier_count, 56);
        assert_eq!(out.meta.source_indices[0], 1);
        assert_eq!(out.meta.source_indices[28], 36);
    }

    #[test]
    fn identity_mask_is_noop() {
        let ds = dataset(8, 4);
        let out = filter_subcarriers(&ds, &[true; 8]).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn empty_mask_rejected() {
        let ds = dataset(4, 2);
        assert!(matches!(filter_subcarriers(&ds, &[false; 4]), Err(Error::EmptySelection)));
        assert!(matches!(filter_subcarriers(&ds, &[true; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn two_point_normalisation() {
        let train = array![[0.0, 5.0], [2.0, 5.0]];
        let norm = Normalizer::fit(train.view()).unwrap();
        assert_eq!(norm.mean[0], 1.0);
        assert_eq!(norm.std[0], 1.0);
        assert!(norm.constant[1]);
        let out = norm.apply(train.view()).unwrap();
        assert_eq!(out, array![[-1.0, 0.0], [1.0, 0.0]]);
        let back = norm.invert(out.view()).unwrap();
        assert_eq!(back, train);
    }

    #[test]
    fn normalised_columns_have_unit_stats() {
        let mut rng = crate::rng::seeded(11);
        let train = Array2::from_shape_fn((300, 7), |(_, j)| rng.random_range(0.0..10.0) * (j + 1) as f64 + j as f64);
        let norm = Normalizer::fit(train.view()).unwrap();
        let out = norm.apply(train.view()).unwrap();
        for col in out.axis_iter(Axis(1)) {
            // independent two-pass recomputation
            let n = col.len() as f64;
            let m = col.iter().sum::<f64>() / n;
            let v = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
            assert!(m.abs() < 1e-9);
            assert!((v.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_normaliser_fit_fails() {
        let empty = Array2::<f64>::zeros((0, 3));
        assert!(Normalizer::fit(empty.view()).is_err());
    }
}
