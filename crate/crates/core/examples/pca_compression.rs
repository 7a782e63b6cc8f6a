//! PCA on normalised CSI frames: explained variance and reconstruction error
//! for a range of retained components.
//!
//! cargo run --example pca_compression

use csi_lossy::classic::PcaModel;
use csi_lossy::dataset::{filter_subcarriers, informative_mask, Normalizer};
use csi_lossy::synth::{gen_presence, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = gen_presence(&SynthConfig { duration_s: 120.0, ..SynthConfig::presence(3) })?;
    let ds = filter_subcarriers(&raw, &informative_mask(&raw))?;
    let frames = Normalizer::fit_dataset(&ds)?.apply(ds.amplitudes().view())?;

    println!("{:>5} {:>12} {:>14} {:>14}", "n_pca", "explained %", "discarded var", "recon MSE");
    for n in [1, 2, 4, 8, 16, ds.width()] {
        let pca = PcaModel::fit(frames.view(), n)?;
        let back = pca.reconstruct_rows(pca.project_rows(frames.view())?.view())?;
        let mse = (&back - &frames).mapv(|v| v * v).sum() / frames.nrows() as f64;
        let explained = 100.0 * pca.explained_variance.sum() / pca.total_variance;
        println!("{n:>5} {explained:>12.2} {:>14.6} {mse:>14.6}", pca.discarded_variance());
    }
    Ok(())
}
