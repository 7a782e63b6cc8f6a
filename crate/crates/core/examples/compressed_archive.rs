//! Stores a dataset as a self-contained CSIZ container, restores it, and
//! checks that re-encoding the restored frames reproduces the index stream.
//!
//! cargo run --example compressed_archive

use csi_lossy::cli::fit_model_pack;
use csi_lossy::container::Archive;
use csi_lossy::dataset::{filter_subcarriers, informative_mask};
use csi_lossy::eval::Task;
use csi_lossy::scheme::{SchemeConfig, Variant};
use csi_lossy::synth::{gen_presence, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = gen_presence(&SynthConfig { duration_s: 60.0, ..SynthConfig::presence(4) })?;
    let ds = filter_subcarriers(&raw, &informative_mask(&raw))?;
    let pack = fit_model_pack(&ds, SchemeConfig::new(Variant::PcaSq, Some(2), 3)?, Task::Presence, 4)?;

    let archive = Archive::compress(&ds, pack.scheme.clone(), pack.normalizer.clone())?;
    let bytes = archive.to_bytes()?;
    let raw_bytes = ds.len() * ds.width() * 4;
    println!(
        "{} frames: {} bits/frame, container {} bytes ({} of them models) vs {raw_bytes} bytes of f32 amplitudes",
        archive.frame_count(),
        archive.rate().bits_per_frame,
        bytes.len(),
        archive.model_bits() / 8
    );

    let restored = Archive::from_bytes(&bytes)?.to_dataset()?;
    let again = Archive::compress(&restored, pack.scheme, pack.normalizer)?;
    println!("restored {} frames; index stream stable: {}", restored.len(), again.indices == archive.indices);
    Ok(())
}
