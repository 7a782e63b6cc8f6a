//! Trains the small VAE, inspects its four-value latent code and quantises
//! it with scalar and vector quantisers.
//!
//! cargo run --release --example vae_latents

use csi_lossy::dataset::{filter_subcarriers, informative_mask, Normalizer};
use csi_lossy::scheme::VaeSettings;
use csi_lossy::synth::{gen_presence, SynthConfig};
use csi_lossy::vae::{LatentMode, LatentQuantizer, RAW_LATENT_BITS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = gen_presence(&SynthConfig { duration_s: 60.0, ..SynthConfig::presence(9) })?;
    let ds = filter_subcarriers(&raw, &informative_mask(&raw))?;
    let frames = Normalizer::fit_dataset(&ds)?.apply(ds.amplitudes().view())?;

    let vae = VaeSettings::presence().fit(frames.view(), 9)?;
    println!("VAE with {} parameters, reconstruction loss {:.4}", vae.param_count(), vae.loss(frames.view(), 0.0)?);
    let first = vae.encode(frames.row(0))?;
    println!("frame 0: mu {:?}, sigma {:?}", first.mu, first.sigma());

    let params = vae.latent_params(frames.view())?;
    let recon = vae.decode_rows(params.slice(ndarray::s![.., ..2]))?;
    let mse = (&recon - &frames).mapv(|v| v * v).mean().unwrap_or(0.0);
    println!("reconstruction MSE per value from mu: {mse:.4} (raw latent {RAW_LATENT_BITS} bits)");

    for (mode, name) in [(LatentMode::Scalar, "scalar"), (LatentMode::Vector, "vector")] {
        for bits in [1, 2, 4] {
            let q = LatentQuantizer::fit(params.view(), mode, bits, 9)?;
            let codes = q.encode_rows(params.view())?;
            let back = q.decode_rows(&codes)?;
            let err = (&back - &params).mapv(|v| v * v).mean().unwrap_or(0.0);
            println!("{name:>6} {bits} bits: {} bits/frame, latent MSE {err:.5}", q.rate(56 * 32).bits_per_frame);
        }
    }
    Ok(())
}
