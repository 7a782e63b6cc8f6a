//! k-means codebooks of growing size on whole CSI frames.
//!
//! cargo run --example vector_quantization

use csi_lossy::classic::VectorQuantizer;
use csi_lossy::dataset::{filter_subcarriers, informative_mask, Normalizer};
use csi_lossy::synth::{gen_presence, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = gen_presence(&SynthConfig { duration_s: 60.0, ..SynthConfig::presence(5) })?;
    let ds = filter_subcarriers(&raw, &informative_mask(&raw))?;
    let frames = Normalizer::fit_dataset(&ds)?.apply(ds.amplitudes().view())?;

    println!("{:>4} {:>9} {:>12} {:>11}", "bits", "codebook", "distortion", "iterations");
    for bits in 1..=6 {
        let vq = VectorQuantizer::fit(frames.view(), bits, 42)?;
        println!("{bits:>4} {:>9} {:>12.5} {:>11}", vq.size(), vq.distortion(frames.view()), vq.distortion_history.len());
    }
    let vq = VectorQuantizer::fit(frames.view(), 2, 42)?;
    let codes = vq.encode_rows(frames.view())?;
    let mut counts = vec![0usize; vq.size()];
    codes.iter().for_each(|&c| counts[c as usize] += 1);
    println!("2-bit cell occupancy: {counts:?}");
    Ok(())
}
