//! A small rate / F1-loss sweep written as sweep.csv + sweep.meta.json and
//! summarised per curve.
//!
//! cargo run --release --example tradeoff_sweep [output-dir]

use std::fs::File;
use std::io::BufReader;

use csi_lossy::eval::report::render_summary;
use csi_lossy::eval::{emit_report, read_sweep_csv, summarize, sweep, ClassifierKind, ExperimentConfig, SweepGrid};
use csi_lossy::scheme::Variant;
use csi_lossy::synth::{gen_presence, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("csi-sweep"), Into::into);
    let ds = gen_presence(&SynthConfig { duration_s: 120.0, ..SynthConfig::presence(0xC51) })?;
    let grid = SweepGrid::new(&[Variant::VqOnly, Variant::PcaSq], vec![1, 2, 3], vec![1, 2]);
    let result = sweep(&ds, &grid, ExperimentConfig::presence(ClassifierKind::Threshold, 0xC51), None)?;
    let (csv, meta) = emit_report(&result, &dir)?;
    println!("baseline F1 {:.4}; wrote {} and {}", result.baseline_f1, csv.display(), meta.display());

    let rows = read_sweep_csv(BufReader::new(File::open(csv)?))?;
    print!("{}", render_summary(&summarize(&rows, 2.0), 2.0));
    Ok(())
}
