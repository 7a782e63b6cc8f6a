use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::nn::{self, Dense, DenseGrad, GradCheck};
use crate::rng;

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl MlpConfig {
    /// One hidden layer of 128 units.
    pub fn presence() -> Self {
        MlpConfig { hidden: vec![128], epochs: 30, batch_size: 32, learning_rate: 0.02, seed: 0 }
    }

    /// Hidden layers of 256 and 64 units.
    pub fn activity() -> Self {
        MlpConfig { hidden: vec![256, 64], epochs: 60, batch_size: 32, learning_rate: 0.02, seed: 0 }
    }
}

/// ReLU network with a softmax output, applied to standardised features.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpClassifier {
    pub layers: Vec<Dense>,
    /// Per-feature standardisation fitted on the training inputs.
    pub feature_mean: Array1<f64>,
    pub feature_std: Array1<f64>,
}

fn one_hot_grad(probs: &Array2<f64>, labels: &[u16]) -> Array2<f64> {
    let n = labels.len() as f64;
    let mut g = probs.clone();
    for (mut row, &y) in g.outer_iter_mut().zip(labels) {
        row[y as usize] -= 1.0;
    }
    g / n
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.outer_iter_mut() {
        let p = softmax(row.as_slice().expect("standard layout"));
        row.assign(&Array1::from(p));
    }
    out
}

fn cross_entropy(probs: &Array2<f64>, labels: &[u16]) -> f64 {
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| -probs[[i, y as usize]].max(f64::MIN_POSITIVE).ln())
        .sum();
    total / labels.len() as f64
}

impl MlpClassifier {
    /// Random network for `inputs` features and `classes` outputs; features
    /// pass through unscaled until [`train`](Self::train) fits the scaling.
    pub fn init(inputs: usize, hidden: &[usize], classes: usize, seed: u64) -> Result<Self> {
        if classes < 2 {
            return Err(Error::config("an MLP classifier needs at least two classes"));
        }
        let mut sizes = vec![inputs];
        sizes.extend(hidden);
        sizes.push(classes);
        let mut rng = rng::seeded(seed);
        Ok(MlpClassifier {
            layers: nn::build_stack(&sizes, &mut rng)?,
            feature_mean: Array1::zeros(inputs),
            feature_std: Array1::ones(inputs),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.feature_mean.len()
    }

    pub fn classes(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    fn standardize(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!("{} features, classifier expects {}", x.ncols(), self.input_dim())));
        }
        Ok((&x - &self.feature_mean) / &self.feature_std)
    }

    fn check_labels(&self, x: ArrayView2<'_, f64>, labels: &[u16]) -> Result<()> {
        if labels.len() != x.nrows() {
            return Err(Error::shape(format!("{} labels for {} inputs", labels.len(), x.nrows())));
        }
        if let Some(&y) = labels.iter().find(|&&y| y as usize >= self.classes()) {
            return Err(Error::Range { index: y as usize, limit: self.classes() });
        }
        Ok(())
    }

    /// Trains a fresh classifier. Returns it with the mean training loss of
    /// each epoch.
    pub fn train(features: ArrayView2<'_, f64>, labels: &[u16], classes: usize, cfg: &MlpConfig) -> Result<(Self, Vec<f64>)> {
        if cfg.epochs == 0 || cfg.batch_size == 0 || cfg.learning_rate < 0.0 {
            return Err(Error::config("epochs and batch size must be positive, learning rate non-negative"));
        }
        if features.nrows() == 0 {
            return Err(Error::InsufficientData("no training inputs".into()));
        }
        let mut clf = MlpClassifier::init(features.ncols(), &cfg.hidden, classes, cfg.seed)?;
        clf.check_labels(features, labels)?;
        clf.feature_mean = features.mean_axis(Axis(0)).expect("non-empty");
        clf.feature_std = features.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
        let x = clf.standardize(features)?;
        let history = clf.fit_standardized(x.view(), labels, cfg)?;
        Ok((clf, history))
    }

    fn fit_standardized(&mut self, x: ArrayView2<'_, f64>, labels: &[u16], cfg: &MlpConfig) -> Result<Vec<f64>> {
        let n = x.nrows();
        let mut rng = rng::seeded(rng::derive_seed(cfg.seed, 1));
        let mut order: Vec<usize> = (0..n).collect();
        let mut history = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let xb = x.select(Axis(0), batch);
                let yb: Vec<u16> = batch.iter().map(|&i| labels[i]).collect();
                let (loss, grads) = self.loss_and_grad(xb.view(), &yb);
                if !loss.is_finite() {
                    return Err(Error::Training { epoch, reason: format!("cross-entropy became {loss}") });
                }
                total += loss * batch.len() as f64;
                for (layer, g) in self.layers.iter_mut().zip(&grads) {
                    layer.step(g, cfg.learning_rate);
                }
            }
            history.push(total / n as f64);
        }
        Ok(history)
    }

    fn loss_and_grad(&self, x: ArrayView2<'_, f64>, labels: &[u16]) -> (f64, Vec<DenseGrad>) {
        let (logits, trace) = nn::stack_forward(&self.layers, x);
        let probs = softmax_rows(&logits);
        let loss = cross_entropy(&probs, labels);
        let (grads, _) = nn::stack_backward(&self.layers, &trace, one_hot_grad(&probs, labels));
        (loss, grads)
    }

    /// Class probabilities for each row of `features`.
    pub fn predict_proba(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let x = self.standardize(features)?;
        Ok(softmax_rows(&nn::stack_forward(&self.layers, x.view()).0))
    }

    pub fn predict(&self, input: ArrayView1<'_, f64>) -> Result<(u16, Vec<f64>)> {
        let p = self.predict_proba(input.insert_axis(Axis(0)))?;
        let probs = p.row(0).to_vec();
        Ok((argmax(&probs) as u16, probs))
    }

    pub fn predict_rows(&self, features: ArrayView2<'_, f64>) -> Result<Vec<u16>> {
        let p = self.predict_proba(features)?;
        Ok(p.outer_iter().map(|row| argmax(row.as_slice().expect("standard layout")) as u16).collect())
    }

    /// Mean cross-entropy on `features`.
    pub fn loss(&self, features: ArrayView2<'_, f64>, labels: &[u16]) -> Result<f64> {
        self.check_labels(features, labels)?;
        Ok(cross_entropy(&self.predict_proba(features)?, labels))
    }

    /// Checks analytic parameter gradients of the cross-entropy against
    /// central differences with step `step`.
    pub fn gradient_check(&self, features: ArrayView2<'_, f64>, labels: &[u16], step: f64) -> Result<GradCheck> {
        self.check_labels(features, labels)?;
        let x = self.standardize(features)?;
        let (_, analytic) = self.loss_and_grad(x.view(), labels);
        let mut layers = self.layers.clone();
        Ok(nn::finite_difference_check(&mut layers, &analytic, step, 1e-8, |ls| {
            let probs = softmax_rows(&nn::stack_forward(ls, x.view()).0);
            cross_entropy(&probs, labels)
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn softmax_is_a_distribution() {
        let p = softmax(&[1.0, 2.0, -3.0, 1000.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&softmax(&[0.0, 0.0, 0.0])), 0);
        assert_eq!(argmax(&[0.1, 5.0, 0.2]), 1);
    }

    #[test]
    fn separable_toy_problem() {
        let mut rng = crate::rng::seeded(3);
        let x = Array2::from_shape_fn((200, 2), |_| rng.random_range(-1.0..1.0));
        let y: Vec<u16> = x.outer_iter().map(|r| (r[0] + 0.5 * r[1] > 0.0) as u16).collect();
        let cfg = MlpConfig { hidden: vec![8], epochs: 500, batch_size: 20, learning_rate: 0.1, seed: 1 };
        let (clf, hist) = MlpClassifier::train(x.view(), &y, 2, &cfg).unwrap();
        assert!(hist.last().unwrap() < &hist[0]);
        assert_eq!(clf.predict_rows(x.view()).unwrap(), y);
    }

    #[test]
    fn zero_learning_rate_keeps_initial_weights() {
        let x = Array2::from_shape_fn((10, 3), |(i, j)| (i * 3 + j) as f64);
        let y = vec![0u16, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let cfg = MlpConfig { hidden: vec![4], epochs: 5, batch_size: 4, learning_rate: 0.0, seed: 7 };
        let (clf, _) = MlpClassifier::train(x.view(), &y, 2, &cfg).unwrap();
        let fresh = MlpClassifier::init(3, &[4], 2, 7).unwrap();
        assert_eq!(clf.layers, fresh.layers);
    }

    #[test]
    fn label_out_of_range() {
        let x = Array2::zeros((2, 2));
        let cfg = MlpConfig { hidden: vec![2], epochs: 1, batch_size: 1, learning_rate: 0.1, seed: 0 };
        assert!(matches!(MlpClassifier::train(x.view(), &[0, 2], 2, &cfg), Err(Error::Range { .. })));
    }
}
