//! Presence detection with the A* threshold detector on uncompressed and
//! compressed CSI.
//!
//! cargo run --release --example presence_detection

use csi_lossy::eval::{ClassifierKind, Experiment, ExperimentConfig};
use csi_lossy::scheme::{SchemeConfig, Variant};
use csi_lossy::synth::{gen_presence, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = gen_presence(&SynthConfig { duration_s: 240.0, ..SynthConfig::presence(0xC51) })?;
    let exp = Experiment::prepare(&ds, ExperimentConfig::presence(ClassifierKind::Threshold, 0xC51))?;
    let baseline = exp.baseline()?;
    println!("uncompressed: {} bits/frame, F1 {:.4}", baseline.rate.bits_per_frame, baseline.f1);

    for scheme in [
        SchemeConfig::new(Variant::PcaSq, Some(2), 3)?,
        SchemeConfig::new(Variant::VqOnly, None, 2)?,
        SchemeConfig::new(Variant::SqOnly, None, 1)?,
        SchemeConfig::new(Variant::PcaVq, Some(1), 1)?,
    ] {
        let p = exp.point(scheme, baseline.f1)?;
        println!(
            "{scheme}: {} bits/frame ({:.1}:1), F1 {:.4}, loss {:.2} points",
            p.rate.bits_per_frame,
            p.rate.compression_ratio(),
            p.f1,
            p.f1_loss_percent
        );
    }
    Ok(())
}
