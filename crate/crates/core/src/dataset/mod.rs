//! CSI data model, preprocessing and train/test windowing.
//!
//! A [`CsiDataset`] stores its frames as one row-major matrix (frames ×
//! subcarriers), either complex channel estimates or amplitudes. Individual
//! frames are materialised as [`CsiFrame`] values on demand.

mod io;
mod preprocess;
mod window;

pub use io::{load_dataset, read_binary, read_csv, save_dataset, write_binary, write_csv, FileFormat, MAGIC};
pub use preprocess::{
    default_retain_mask, extract_amplitude, filter_subcarriers, informative_mask, Normalizer,
};
pub use window::{
    make_windows, split_activity, split_presence, ActivitySplit, Split, Window, WindowSpec,
};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Per-frame channel values: raw complex estimates or extracted amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameValues {
    Complex(Vec<Complex64>),
    Amplitude(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiFrame {
    pub timestamp: f64,
    pub values: FrameValues,
}

impl CsiFrame {
    pub fn width(&self) -> usize {
        match &self.values {
            FrameValues::Complex(v) => v.len(),
            FrameValues::Amplitude(v) => v.len(),
        }
    }
}

/// Matrix storage behind a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Complex(Array2<Complex64>),
    Amplitude(Array2<f64>),
}

impl Samples {
    pub fn nrows(&self) -> usize {
        match self {
            Samples::Complex(m) => m.nrows(),
            Samples::Amplitude(m) => m.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Samples::Complex(m) => m.ncols(),
            Samples::Amplitude(m) => m.ncols(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Samples::Complex(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    /// W: number of subcarriers per frame.
    pub subcarrier_count: usize,
    /// Frames per second.
    pub frame_rate: f64,
    pub channel_width_mhz: u32,
    /// `true` marks a guard (non-informative) subcarrier. Always W entries.
    pub guard_mask: Vec<bool>,
    /// Index of each current subcarrier in the originally captured frame.
    pub source_indices: Vec<usize>,
}

impl DatasetMeta {
    pub fn new(subcarrier_count: usize, frame_rate: f64, channel_width_mhz: u32) -> Self {
        DatasetMeta {
            subcarrier_count,
            frame_rate,
            channel_width_mhz,
            guard_mask: vec![false; subcarrier_count],
            source_indices: (0..subcarrier_count).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiDataset {
    pub timestamps: Vec<f64>,
    pub samples: Samples,
    pub labels: Vec<u16>,
    pub class_names: Vec<String>,
    pub meta: DatasetMeta,
}

impl CsiDataset {
    /// Builds a dataset, checking the structural invariants.
    pub fn new(
        timestamps: Vec<f64>,
        samples: Samples,
        labels: Vec<u16>,
        class_names: Vec<String>,
        meta: DatasetMeta,
    ) -> Result<Self> {
        let n = samples.nrows();
        if timestamps.len() != n || labels.len() != n {
            return Err(Error::shape(format!(
                "{} frames but {} timestamps and {} labels",
                n,
                timestamps.len(),
                labels.len()
            )));
        }
        if samples.ncols() != meta.subcarrier_count {
            return Err(Error::shape(format!(
                "frames have {} subcarriers, meta says {}",
                samples.ncols(),
                meta.subcarrier_count
            )));
        }
        if meta.guard_mask.len() != meta.subcarrier_count
            || meta.source_indices.len() != meta.subcarrier_count
        {
            return Err(Error::shape("guard mask length differs from W"));
        }
        if timestamps.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::format("timestamps decrease"));
        }
        if let Samples::Amplitude(m) = &samples {
            if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::format("amplitudes must be finite and non-negative"));
            }
        }
        let k = class_names.len();
        if k > 0 {
            if let Some(bad) = labels.iter().find(|&&l| l as usize >= k) {
                return Err(Error::format(format!("label {bad} outside {k} classes")));
            }
        }
        let mut ds = CsiDataset { timestamps, samples, labels, class_names, meta };
        ds.fill_class_names();
        Ok(ds)
    }

    /// Amplitude-only dataset with timestamps synthesised from `meta.frame_rate`.
    pub fn from_amplitudes(amplitudes: Array2<f64>, labels: Vec<u16>, meta: DatasetMeta) -> Result<Self> {
        let timestamps = synth_timestamps(amplitudes.nrows(), meta.frame_rate);
        CsiDataset::new(timestamps, Samples::Amplitude(amplitudes), labels, Vec::new(), meta)
    }

    fn fill_class_names(&mut self) {
        let k = self.labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        for i in self.class_names.len()..k {
            self.class_names.push(format!("class{i}"));
        }
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.samples.ncols()
    }

    /// K: number of classes.
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn frame(&self, i: usize) -> CsiFrame {
        let values = match &self.samples {
            Samples::Complex(m) => FrameValues::Complex(m.row(i).to_vec()),
            Samples::Amplitude(m) => FrameValues::Amplitude(m.row(i).to_vec()),
        };
        CsiFrame { timestamp: self.timestamps[i], values }
    }

    /// Amplitude matrix (frames × subcarriers); complex data is converted.
    pub fn amplitudes(&self) -> Array2<f64> {
        match &self.samples {
            Samples::Amplitude(m) => m.clone(),
            Samples::Complex(m) => m.mapv(|z| z.norm()),
        }
    }

    /// Borrowed amplitude matrix, if the dataset is amplitude-only.
    pub fn amplitude_view(&self) -> Option<ArrayView2<'_, f64>> {
        match &self.samples {
            Samples::Amplitude(m) => Some(m.view()),
            Samples::Complex(_) => None,
        }
    }

    /// Converts complex samples to amplitudes in place; no-op on amplitude data.
    pub fn into_amplitude(mut self) -> Self {
        if let Samples::Complex(m) = &self.samples {
            self.samples = Samples::Amplitude(m.mapv(|z| z.norm()));
        }
        self
    }

    /// Same labels/timestamps/meta, new amplitude matrix of identical shape.
    pub fn with_amplitudes(&self, amplitudes: Array2<f64>) -> Result<Self> {
        if amplitudes.dim() != (self.len(), self.width()) {
            return Err(Error::shape(format!(
                "replacement matrix {:?} differs from dataset {:?}",
                amplitudes.dim(),
                (self.len(), self.width())
            )));
        }
        let mut out = self.clone();
        out.samples = Samples::Amplitude(amplitudes.mapv(|v| v.max(0.0)));
        Ok(out)
    }

    /// Frames `range` of the amplitude matrix.
    pub fn amplitude_rows(&self, start: usize, end: usize) -> Array2<f64> {
        match &self.samples {
            Samples::Amplitude(m) => m.slice_axis(Axis(0), (start..end).into()).to_owned(),
            Samples::Complex(m) => m.slice_axis(Axis(0), (start..end).into()).mapv(|z| z.norm()),
        }
    }

    pub fn row_amplitude(&self, i: usize) -> Vec<f64> {
        match &self.samples {
            Samples::Amplitude(m) => m.row(i).to_vec(),
            Samples::Complex(m) => m.row(i).iter().map(|z| z.norm()).collect(),
        }
    }

    pub fn labels_view(&self) -> ArrayView1<'_, u16> {
        ArrayView1::from(&self.labels[..])
    }
}

pub(crate) fn synth_timestamps(n: usize, frame_rate: f64) -> Vec<f64> {
    if frame_rate > 0.0 {
        (0..n).map(|i| i as f64 / frame_rate).collect()
    } else {
        (0..n).map(|i| i as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn class_count_inferred_from_labels() {
        let ds = CsiDataset::from_amplitudes(
            array![[1.0, 2.0], [1.0, 2.0], [3.0, 4.0]],
            vec![0, 0, 1],
            DatasetMeta::new(2, 10.0, 20),
        )
        .unwrap();
        assert_eq!(ds.class_count(), 2);
        assert_eq!(ds.timestamps, vec![0.0, 0.1, 0.2]);
    }

    #[test]
    fn rejects_negative_amplitudes() {
        let err = CsiDataset::from_amplitudes(array![[-1.0]], vec![0], DatasetMeta::new(1, 1.0, 20));
        assert!(matches!(err, Err(Error::Format(_))));
    }

    #[test]
    fn rejects_label_count_mismatch() {
        let err = CsiDataset::from_amplitudes(array![[1.0]], vec![0, 1], DatasetMeta::new(1, 1.0, 20));
        assert!(matches!(err, Err(Error::Shape(_))));
    }
}
