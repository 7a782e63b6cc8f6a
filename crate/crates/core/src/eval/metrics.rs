use crate::error::{Error, Result};

/// `K × K` counts; rows are the true class, columns the prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F1Mode {
    /// F1 of one positive class.
    Binary { positive: usize },
    /// Unweighted mean of per-class F1.
    Macro,
}

/// F1 with the classes that had neither support nor predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct F1Report {
    pub f1: f64,
    pub empty_classes: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        ConfusionMatrix { k: classes, counts: vec![0; classes * classes] }
    }

    pub fn from_predictions(classes: usize, truth: &[u16], predicted: &[u16]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::shape(format!("{} labels vs {} predictions", truth.len(), predicted.len())));
        }
        let mut m = ConfusionMatrix::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.add(t as usize, p as usize)?;
        }
        Ok(m)
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<()> {
        for c in [truth, predicted] {
            if c >= self.k {
                return Err(Error::Range { index: c, limit: self.k });
            }
        }
        self.counts[truth * self.k + predicted] += 1;
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.k + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// F1 of class `c` with the support/prediction counts it was based on.
    fn class_f1(&self, c: usize) -> (f64, u64, u64) {
        let tp = self.get(c, c);
        let support: u64 = (0..self.k).map(|p| self.get(c, p)).sum();
        let predicted: u64 = (0..self.k).map(|t| self.get(t, c)).sum();
        let denom = support + predicted;
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
        (f1, support, predicted)
    }

    pub fn f1_report(&self, mode: F1Mode) -> Result<F1Report> {
        if self.total() == 0 {
            return Err(Error::EmptyResult("confusion matrix has no entries".into()));
        }
        let per_class: Vec<(f64, u64, u64)> = (0..self.k).map(|c| self.class_f1(c)).collect();
        let empty_classes = per_class.iter().enumerate().filter(|(_, c)| c.1 == 0 && c.2 == 0).map(|(i, _)| i).collect();
        let f1 = match mode {
            F1Mode::Binary { positive } => {
                if positive >= self.k {
                    return Err(Error::Range { index: positive, limit: self.k });
                }
                per_class[positive].0
            }
            F1Mode::Macro => per_class.iter().map(|c| c.0).sum::<f64>() / self.k as f64,
        };
        Ok(F1Report { f1, empty_classes })
    }
}

pub fn f1_score(matrix: &ConfusionMatrix, mode: F1Mode) -> Result<f64> {
    Ok(matrix.f1_report(mode)?.f1)
}

/// Percentage drop of `compressed_f1` relative to `baseline_f1`; negative
/// when compression helps.
pub fn relative_f1_loss(baseline_f1: f64, compressed_f1: f64) -> f64 {
    100.0 * (baseline_f1 - compressed_f1) / baseline_f1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_diagonal() {
        let m = ConfusionMatrix::from_predictions(3, &[0, 1, 2, 2], &[0, 1, 2, 2]).unwrap();
        assert_eq!(f1_score(&m, F1Mode::Macro).unwrap(), 1.0);
    }

    #[test]
    fn binary_half() {
        // TP=1, FP=1, FN=1, TN=0
        let m = ConfusionMatrix::from_predictions(2, &[1, 0, 1], &[1, 1, 0]).unwrap();
        assert_eq!(f1_score(&m, F1Mode::Binary { positive: 1 }).unwrap(), 0.5);
    }

    #[test]
    fn empty_matrix_errors() {
        assert!(matches!(f1_score(&ConfusionMatrix::new(2), F1Mode::Macro), Err(Error::EmptyResult(_))));
    }

    #[test]
    fn empty_class_flagged() {
        let m = ConfusionMatrix::from_predictions(3, &[0, 1], &[0, 1]).unwrap();
        let r = m.f1_report(F1Mode::Macro).unwrap();
        assert_eq!(r.empty_classes, vec![2]);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn relative_loss_cases() {
        assert_eq!(relative_f1_loss(0.9, 0.9), 0.0);
        assert_eq!(relative_f1_loss(0.8, 0.4), 50.0);
        assert!((relative_f1_loss(0.9, 0.927) + 3.0).abs() < 1e-12);
    }
}
