//! Classic lossy coders: PCA projection, Lloyd-Max scalar quantisation and
//! k-means vector quantisation.

pub mod kmeans;
pub mod lloyd_max;
pub mod pca;

pub use kmeans::VectorQuantizer;
pub use lloyd_max::{ScalarCodec, ScalarQuantizer};
pub use pca::PcaModel;
