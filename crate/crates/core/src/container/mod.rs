//! Binary containers: `CSIM` model files and `CSIZ` compressed streams.

mod archive;
pub mod bitpack;
mod model;

pub use archive::{Archive, SideInfo, ARCHIVE_MAGIC};
pub use model::{load_model, model_from_bytes, model_to_bytes, save_model, Model, MODEL_MAGIC};
