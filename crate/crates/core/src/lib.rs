//! Lossy compression of Wi-Fi CSI amplitude data and the effect it has on
//! presence detection and activity recognition.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classic;
pub mod cli;
pub mod container;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod nn;
pub mod rng;
pub mod scheme;
pub mod sensing;
pub mod synth;
pub mod vae;

pub use error::{Error, Result};
