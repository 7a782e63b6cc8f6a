//! `sweep.csv` / `sweep.meta.json` output and a plain-text summary of them.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::sweep::{SweepGrid, SweepResult};
use crate::scheme::FLOAT_BITS;

pub const CSV_HEADER: &str = "variant,n_pca,bits,bits_per_frame,compression_ratio,f1,f1_loss_percent";
pub const CSV_NAME: &str = "sweep.csv";
pub const META_NAME: &str = "sweep.meta.json";

/// Seventeen significant digits, enough to round-trip any f64.
fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// Writes the sweep table, one row per grid cell in grid order.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, out: &mut W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let d = (result.uncompressed_bits_per_frame / FLOAT_BITS) as usize;
    for cell in &result.cells {
        let rate = cell.scheme.rate(d);
        let (f1, loss) = match &cell.outcome {
            Ok(p) => (p.f1, p.f1_loss_percent),
            Err(_) => (f64::NAN, f64::NAN),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            cell.scheme.variant,
            cell.scheme.n_pca.map(|n| n.to_string()).unwrap_or_default(),
            cell.scheme.bits,
            rate.bits_per_frame,
            float(rate.compression_ratio()),
            float(f1),
            float(loss)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub seed: u64,
    pub dataset_sha256: String,
    pub grid: SweepGrid,
    pub tool_version: String,
    pub task: String,
    pub classifier: String,
    pub training_mode: String,
    pub baseline_f1: f64,
    pub uncompressed_bits_per_frame: u64,
    pub failed_cells: Vec<String>,
}

pub fn sweep_meta(result: &SweepResult) -> SweepMeta {
    SweepMeta {
        seed: result.seed,
        dataset_sha256: result.dataset_sha256.clone(),
        grid: result.grid.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        task: result.config.task.to_string(),
        classifier: result.config.classifier.to_string(),
        training_mode: result.config.mode.to_string(),
        baseline_f1: result.baseline_f1,
        uncompressed_bits_per_frame: result.uncompressed_bits_per_frame,
        failed_cells: result
            .cells
            .iter()
            .filter_map(|c| c.outcome.as_ref().err().map(|e| format!("{}: {e}", c.scheme)))
            .collect(),
    }
}

/// Writes `sweep.csv` and `sweep.meta.json` into `dir` and returns their paths.
pub fn emit_report(result: &SweepResult, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let mut csv = Vec::new();
    write_sweep_csv(result, &mut csv)?;
    let meta = serde_json::to_string_pretty(&sweep_meta(result)).map_err(|e| Error::format(e.to_string()))?;
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(CSV_NAME);
    let meta_path = dir.join(META_NAME);
    fs::write(&csv_path, csv)?;
    fs::write(&meta_path, meta + "\n")?;
    Ok((csv_path, meta_path))
}

/// A parsed `sweep.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub variant: String,
    pub n_pca: Option<usize>,
    pub bits: u8,
    pub bits_per_frame: u64,
    pub compression_ratio: f64,
    pub f1: f64,
    pub f1_loss_percent: f64,
}

pub fn read_sweep_csv<R: BufRead>(input: R) -> Result<Vec<SweepRow>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != CSV_HEADER {
        return Err(Error::format(format!("unexpected sweep header '{header}'")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::format(format!("row {}: expected 7 fields, got {}", i + 2, f.len())));
        }
        let bad = |what: &str| Error::format(format!("row {}: bad {what}", i + 2));
        rows.push(SweepRow {
            variant: f[0].to_string(),
            n_pca: if f[1].is_empty() { None } else { Some(f[1].parse().map_err(|_| bad("n_pca"))?) },
            bits: f[2].parse().map_err(|_| bad("bits"))?,
            bits_per_frame: f[3].parse().map_err(|_| bad("bits_per_frame"))?,
            compression_ratio: f[4].parse().map_err(|_| bad("compression_ratio"))?,
            f1: f[5].parse().map_err(|_| bad("f1"))?,
            f1_loss_percent: f[6].parse().map_err(|_| bad("f1_loss_percent"))?,
        });
    }
    Ok(rows)
}

/// Best (lowest-loss) cell of one curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSummary {
    pub variant: String,
    pub n_pca: Option<usize>,
    pub cells: usize,
    pub min_loss_percent: f64,
    pub at_bits_per_frame: u64,
    /// Fewest bits per frame whose loss stays within `max_loss`.
    pub cheapest_within: Option<u64>,
}

/// Groups rows into curves (variant, n_pca) and summarises each.
pub fn summarize(rows: &[SweepRow], max_loss: f64) -> Vec<CurveSummary> {
    let mut keys: Vec<(String, Option<usize>)> = Vec::new();
    for r in rows {
        let k = (r.variant.clone(), r.n_pca);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(variant, n_pca)| {
            let curve: Vec<&SweepRow> =
                rows.iter().filter(|r| r.variant == variant && r.n_pca == n_pca && r.f1_loss_percent.is_finite()).collect();
            let best = curve.iter().min_by(|a, b| a.f1_loss_percent.total_cmp(&b.f1_loss_percent).then(a.bits_per_frame.cmp(&b.bits_per_frame)));
            let cheapest_within = curve.iter().filter(|r| r.f1_loss_percent <= max_loss).map(|r| r.bits_per_frame).min();
            CurveSummary {
                variant,
                n_pca,
                cells: curve.len(),
                min_loss_percent: best.map_or(f64::NAN, |r| r.f1_loss_percent),
                at_bits_per_frame: best.map_or(0, |r| r.bits_per_frame),
                cheapest_within,
            }
        })
        .collect()
}

pub fn render_summary(summaries: &[CurveSummary], max_loss: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<10} {:>5} {:>6} {:>14} {:>10} {:>16}", "variant", "n_pca", "cells", "min loss (%)", "at bits", format!("bits @ <={max_loss}%"));
    for c in summaries {
        let _ = writeln!(
            s,
            "{:<10} {:>5} {:>6} {:>14.3} {:>10} {:>16}",
            c.variant,
            c.n_pca.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
            c.cells,
            c.min_loss_percent,
            c.at_bits_per_frame,
            c.cheapest_within.map(|b| b.to_string()).unwrap_or_else(|| "-".into())
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_has_seventeen_significant_digits() {
        let s = float(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(float(f64::NAN), "NaN");
    }

    #[test]
    fn parse_and_summarize() {
        let text = format!(
            "{CSV_HEADER}\npca_sq,2,1,2,{r1},{f},{l1}\npca_sq,2,3,6,{r3},{f},{l3}\nsq_only,,1,56,{r56},NaN,NaN\n",
            r1 = float(896.0),
            r3 = float(1792.0 / 6.0),
            r56 = float(32.0),
            f = float(0.9),
            l1 = float(10.0),
            l3 = float(1.0)
        );
        let rows = read_sweep_csv(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].n_pca, None);
        let s = summarize(&rows, 5.0);
        assert_eq!(s[0].min_loss_percent, 1.0);
        assert_eq!(s[0].at_bits_per_frame, 6);
        assert_eq!(s[0].cheapest_within, Some(6));
        assert_eq!(s[1].cells, 0);
        assert!(read_sweep_csv("a,b\n".as_bytes()).is_err());
    }
}
