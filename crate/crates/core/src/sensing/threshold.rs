use crate::error::{Error, Result};

/// Binary detector: positive (presence) iff the feature exceeds `threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdClassifier {
    pub threshold: f64,
    /// F1 of the positive class on the training features.
    pub training_f1: f64,
    /// All training features were equal, so no separating threshold exists.
    pub degenerate: bool,
}

impl ThresholdClassifier {
    pub fn predict(&self, feature: f64) -> bool {
        threshold_predict(self, feature)
    }

    pub fn predict_all(&self, features: &[f64]) -> Vec<bool> {
        features.iter().map(|&f| self.predict(f)).collect()
    }
}

pub fn threshold_predict(clf: &ThresholdClassifier, feature: f64) -> bool {
    feature > clf.threshold
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Picks the midpoint between consecutive distinct sorted feature values that
/// maximises training F1 of the positive class; the smallest such midpoint
/// wins ties.
pub fn fit_threshold(samples: &[(f64, bool)]) -> Result<ThresholdClassifier> {
    let positives = samples.iter().filter(|s| s.1).count();
    if positives == 0 || positives == samples.len() {
        return Err(Error::DegenerateLabels(format!("{positives} positive of {} training windows", samples.len())));
    }
    if samples.iter().any(|s| !s.0.is_finite()) {
        return Err(Error::format("threshold features must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();

    // positives strictly above sorted[i] for a threshold just past index i
    let mut above = vec![0usize; n + 1];
    for i in (0..n).rev() {
        above[i] = above[i + 1] + sorted[i].1 as usize;
    }
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        if sorted[i].0 == sorted[i + 1].0 {
            continue;
        }
        let t = 0.5 * (sorted[i].0 + sorted[i + 1].0);
        let tp = above[i + 1];
        let fp = (n - i - 1) - tp;
        let fn_ = positives - tp;
        let score = f1(tp, fp, fn_);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((t, score));
        }
    }
    Ok(match best {
        Some((threshold, training_f1)) => ThresholdClassifier { threshold, training_f1, degenerate: false },
        None => {
            // every feature equal: all predicted negative at this threshold
            ThresholdClassifier { threshold: sorted[0].0, training_f1: 0.0, degenerate: true }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable() {
        let s = [(0.1, false), (0.9, true), (0.2, false), (0.8, true)];
        let c = fit_threshold(&s).unwrap();
        assert!((c.threshold - 0.5).abs() < 1e-15);
        assert_eq!(c.training_f1, 1.0);
    }

    #[test]
    fn all_equal_is_degenerate() {
        let c = fit_threshold(&[(0.3, false), (0.3, true), (0.3, true)]).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.threshold, 0.3);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(fit_threshold(&[(0.1, true), (0.2, true)]), Err(Error::DegenerateLabels(_))));
    }

    #[test]
    fn strict_inequality() {
        let c = ThresholdClassifier { threshold: 0.5, training_f1: 1.0, degenerate: false };
        assert!(!c.predict(0.5));
        assert!(c.predict(0.5 + 1e-12));
        let xs = [0.1, 0.5, 0.7];
        assert_eq!(c.predict_all(&xs), xs.iter().map(|&x| c.predict(x)).collect::<Vec<_>>());
    }
}
