//! Generates the synthetic presence and activity datasets and round-trips
//! them through both interchange formats.
//!
//! cargo run --example synth_datasets

use csi_lossy::dataset::{read_binary, read_csv, write_binary, write_csv};
use csi_lossy::synth::{gen_activity, gen_presence, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let presence = gen_presence(&SynthConfig { duration_s: 60.0, ..SynthConfig::presence(7) })?;
    let activity = gen_activity(&SynthConfig { duration_s: 16.0, ..SynthConfig::activity(7) }, 5)?;
    for (name, ds) in [("presence", &presence), ("activity", &activity)] {
        println!(
            "{name}: {} frames x {} subcarriers at {} fps, classes {:?}",
            ds.len(),
            ds.width(),
            ds.meta.frame_rate,
            ds.class_names
        );
    }

    let mut bin = Vec::new();
    write_binary(&presence, &mut bin)?;
    let mut csv = Vec::new();
    write_csv(&presence, &mut csv)?;
    let from_bin = read_binary(&mut bin.as_slice())?;
    let from_csv = read_csv(&mut csv.as_slice())?;
    println!("binary {} bytes, CSV {} bytes", bin.len(), csv.len());
    println!("amplitudes identical after both round trips: {}", from_bin == presence && from_csv == presence);
    Ok(())
}
