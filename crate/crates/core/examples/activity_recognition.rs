//! Activity recognition with the MLP on uncompressed and PCA-compressed
//! 128-subcarrier CSI.
//!
//! cargo run --release --example activity_recognition

use csi_lossy::eval::{Experiment, ExperimentConfig};
use csi_lossy::scheme::{SchemeConfig, Variant};
use csi_lossy::synth::{gen_activity, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = gen_activity(&SynthConfig::activity(0xC51), 5)?;
    let exp = Experiment::prepare(&ds, ExperimentConfig::activity(0xC51))?;
    let baseline = exp.baseline()?;
    println!("uncompressed: {} bits/frame, macro-F1 {:.4}", baseline.rate.bits_per_frame, baseline.f1);
    println!("{:?}", baseline.confusion);

    for scheme in [
        SchemeConfig::new(Variant::PcaSq, Some(4), 2)?,
        SchemeConfig::new(Variant::PcaVq, Some(2), 4)?,
        SchemeConfig::new(Variant::PcaVq, Some(8), 4)?,
    ] {
        let p = exp.point(scheme, baseline.f1)?;
        println!("{scheme}: {} bits/frame, macro-F1 {:.4}, loss {:.2} points", p.rate.bits_per_frame, p.f1, p.f1_loss_percent);
    }
    Ok(())
}
