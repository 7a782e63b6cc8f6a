//! Dense layers with hand-written backpropagation, shared by the VAE and the
//! MLP classifier.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Fully connected layer computing `x · Wᵀ + b` for a batch of row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out × in`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Gradient of a loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    pub fn init(inputs: usize, outputs: usize, rng: &mut rng::Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = Array2::from_shape_fn((outputs, inputs), |_| rng.random_range(-limit..limit));
        Dense { weights, bias: Array1::zeros(outputs) }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        x.dot(&self.weights.t()) + &self.bias
    }

    /// Returns the parameter gradient and the gradient with respect to `x`.
    pub fn backward(&self, x: ArrayView2<'_, f64>, grad_out: ArrayView2<'_, f64>) -> (DenseGrad, Array2<f64>) {
        let gw = grad_out.t().dot(&x);
        let gb = grad_out.sum_axis(Axis(0));
        let gx = grad_out.dot(&self.weights);
        (DenseGrad { weights: gw, bias: gb }, gx)
    }

    pub fn step(&mut self, grad: &DenseGrad, learning_rate: f64) {
        self.weights.scaled_add(-learning_rate, &grad.weights);
        self.bias.scaled_add(-learning_rate, &grad.bias);
    }

    /// Parameter `i` in (weights row-major, then bias) order.
    pub(crate) fn param_mut(&mut self, i: usize) -> &mut f64 {
        let nw = self.weights.len();
        if i < nw {
            let cols = self.weights.ncols();
            &mut self.weights[[i / cols, i % cols]]
        } else {
            &mut self.bias[i - nw]
        }
    }
}

impl DenseGrad {
    pub(crate) fn get(&self, i: usize) -> f64 {
        let nw = self.weights.len();
        if i < nw {
            let cols = self.weights.ncols();
            self.weights[[i / cols, i % cols]]
        } else {
            self.bias[i - nw]
        }
    }
}

pub fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Zeroes `grad` where the pre-activation was not positive.
pub fn relu_backward(pre: &Array2<f64>, grad: Array2<f64>) -> Array2<f64> {
    let mut g = grad;
    g.zip_mut_with(pre, |g, &p| {
        if p <= 0.0 {
            *g = 0.0;
        }
    });
    g
}

/// Forward activations of a ReLU stack with a linear last layer.
pub(crate) struct StackTrace {
    /// Input to each layer.
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activation output of each layer.
    pub pre: Vec<Array2<f64>>,
}

pub(crate) fn stack_forward(layers: &[Dense], x: ArrayView2<'_, f64>) -> (Array2<f64>, StackTrace) {
    let mut trace = StackTrace { inputs: Vec::with_capacity(layers.len()), pre: Vec::with_capacity(layers.len()) };
    let mut h = x.to_owned();
    for (i, layer) in layers.iter().enumerate() {
        let z = layer.forward(h.view());
        trace.inputs.push(h);
        h = if i + 1 < layers.len() { relu(&z) } else { z.clone() };
        trace.pre.push(z);
    }
    (h, trace)
}

/// Backpropagates `grad_out` (gradient at the linear output) through the stack.
pub(crate) fn stack_backward(layers: &[Dense], trace: &StackTrace, grad_out: Array2<f64>) -> (Vec<DenseGrad>, Array2<f64>) {
    let mut grads = Vec::with_capacity(layers.len());
    let mut g = grad_out;
    for i in (0..layers.len()).rev() {
        if i + 1 < layers.len() {
            g = relu_backward(&trace.pre[i], g);
        }
        let (pg, gx) = layers[i].backward(trace.inputs[i].view(), g.view());
        grads.push(pg);
        g = gx;
    }
    grads.reverse();
    (grads, g)
}

pub(crate) fn build_stack(sizes: &[usize], rng: &mut rng::Rng) -> Result<Vec<Dense>> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::config(format!("layer sizes must be positive, got {sizes:?}")));
    }
    Ok(sizes.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect())
}

/// Finite-difference comparison result.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// Largest relative error over all checked parameters.
    pub max_relative_error: f64,
    /// Largest relative error per layer, in network order.
    pub per_layer: Vec<f64>,
    /// Parameters whose gradient magnitude exceeded the check floor.
    pub checked: usize,
}

/// Compares analytic gradients against central differences.
///
/// `loss` evaluates the objective for the current parameters of `layers`.
/// Parameters whose analytic and numeric gradients both fall at or below
/// `floor` in magnitude are skipped.
pub(crate) fn finite_difference_check(
    layers: &mut [Dense],
    analytic: &[DenseGrad],
    step: f64,
    floor: f64,
    mut loss: impl FnMut(&[Dense]) -> f64,
) -> GradCheck {
    let mut per_layer = vec![0.0; layers.len()];
    let mut checked = 0;
    for li in 0..layers.len() {
        for pi in 0..layers[li].param_count() {
            let orig = *layers[li].param_mut(pi);
            *layers[li].param_mut(pi) = orig + step;
            let up = loss(layers);
            *layers[li].param_mut(pi) = orig - step;
            let down = loss(layers);
            *layers[li].param_mut(pi) = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic[li].get(pi);
            if a.abs().max(numeric.abs()) <= floor {
                continue;
            }
            checked += 1;
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs());
            if rel > per_layer[li] {
                per_layer[li] = rel;
            }
        }
    }
    let max_relative_error = per_layer.iter().cloned().fold(0.0, f64::max);
    GradCheck { max_relative_error, per_layer, checked }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn dense_forward_shape() {
        let layer = Dense { weights: array![[1.0, 2.0], [0.0, -1.0], [3.0, 0.5]], bias: array![0.0, 1.0, -1.0] };
        let y = layer.forward(array![[1.0, 1.0]].view());
        assert_eq!(y, array![[3.0, 0.0, 2.5]]);
    }

    #[test]
    fn dense_backward_matches_definition() {
        let layer = Dense { weights: array![[1.0, 2.0]], bias: array![0.5] };
        let x = array![[3.0, 4.0], [1.0, -1.0]];
        let (g, gx) = layer.backward(x.view(), array![[1.0], [2.0]].view());
        assert_eq!(g.weights, array![[5.0, 2.0]]);
        assert_eq!(g.bias, array![3.0]);
        assert_eq!(gx, array![[1.0, 2.0], [2.0, 4.0]]);
    }
}
