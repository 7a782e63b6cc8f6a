//! Guard removal, normalisation, windowing and the two train/test splits.
//!
//! cargo run --example preprocess_windows

use csi_lossy::dataset::{
    filter_subcarriers, informative_mask, make_windows, split_activity, split_presence, ActivitySplit, Normalizer,
    WindowSpec,
};
use csi_lossy::sensing::compute_a_star;
use csi_lossy::synth::{gen_activity, gen_presence, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let raw = gen_presence(&SynthConfig { duration_s: 120.0, ..SynthConfig::presence(1) })?;
    let ds = filter_subcarriers(&raw, &informative_mask(&raw))?;
    println!("{} subcarriers -> {} after guard removal", raw.width(), ds.width());

    let norm = Normalizer::fit_dataset(&ds)?;
    let z = norm.apply(ds.amplitudes().view())?;
    println!("normalised column 0: mean {:.2e}", z.column(0).mean().unwrap_or(0.0));

    let windows = make_windows(&ds, WindowSpec::PRESENCE)?;
    println!("{} windows of 64 frames, stride 32", windows.len());
    let amps = ds.amplitudes();
    for w in windows.iter().step_by(60).take(4) {
        println!("  window @{:>5} label {} A* = {:.4}", w.start, w.label, compute_a_star(w.matrix(amps.view()))?.a_star);
    }

    let split = split_presence(&ds, 3.0, WindowSpec::PRESENCE, 2.0 / 3.0)?;
    println!("presence split: {} train / {} test windows", split.train.len(), split.test.len());

    let act = gen_activity(&SynthConfig { duration_s: 80.0, ..SynthConfig::activity(1) }, 2)?;
    let split = split_activity(&act, &ActivitySplit::default(), WindowSpec::ACTIVITY)?;
    println!("activity split: {} train / {} test windows", split.train.len(), split.test.len());
    Ok(())
}
