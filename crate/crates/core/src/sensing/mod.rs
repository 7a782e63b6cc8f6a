//! Sensing back-ends: the A* threshold detector and an MLP classifier.

mod a_star;
mod mlp;
mod threshold;

pub use a_star::{compute_a_star, WindowFeature};
pub use mlp::{argmax, softmax, MlpClassifier, MlpConfig};
pub use threshold::{fit_threshold, threshold_predict, ThresholdClassifier};
