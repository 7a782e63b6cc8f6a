use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::{write_binary, CsiDataset};
use crate::error::{Error, Result};
use crate::eval::experiment::{ClassifierKind, Experiment, ExperimentConfig, TradeoffPoint};
use crate::scheme::{SchemeConfig, Variant};

/// Cartesian grid of schemes. `n_pca` only applies to the PCA variants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub variants: Vec<String>,
    pub bits: Vec<u8>,
    pub n_pca: Vec<usize>,
}

impl SweepGrid {
    /// Every scheme the classifier accepts, bits 1..=8, n_pca ∈ {1, 2, 4, 8}.
    pub fn default_for(classifier: ClassifierKind) -> Self {
        let variants: Vec<Variant> = match classifier {
            ClassifierKind::Threshold => vec![Variant::SqOnly, Variant::VqOnly, Variant::PcaSq, Variant::PcaVq],
            ClassifierKind::Mlp => Variant::COMPRESSED.to_vec(),
        };
        SweepGrid { variants: variants.iter().map(|v| v.name().to_string()).collect(), bits: (1..=8).collect(), n_pca: vec![1, 2, 4, 8] }
    }

    pub fn new(variants: &[Variant], bits: Vec<u8>, n_pca: Vec<usize>) -> Self {
        SweepGrid { variants: variants.iter().map(|v| v.name().to_string()).collect(), bits, n_pca }
    }

    /// Cells in output order: variant, then n_pca, then bits.
    pub fn cells(&self) -> Result<Vec<SchemeConfig>> {
        let mut out = Vec::new();
        for name in &self.variants {
            let variant: Variant = name.parse()?;
            if variant == Variant::Uncompressed {
                return Err(Error::config("the uncompressed baseline is not a grid variant"));
            }
            let pcas: Vec<Option<usize>> =
                if variant.uses_pca() { self.n_pca.iter().map(|&n| Some(n)).collect() } else { vec![None] };
            for n_pca in pcas {
                for &bits in &self.bits {
                    out.push(SchemeConfig { variant, n_pca, bits });
                }
            }
        }
        Ok(out)
    }
}

/// One grid cell; failed cells keep their error message.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub scheme: SchemeConfig,
    pub outcome: std::result::Result<TradeoffPoint, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub baseline_f1: f64,
    pub uncompressed_bits_per_frame: u64,
    pub cells: Vec<SweepCell>,
    pub seed: u64,
    pub dataset_sha256: String,
    pub grid: SweepGrid,
    pub config: ExperimentConfig,
}

impl SweepResult {
    pub fn points(&self) -> impl Iterator<Item = &TradeoffPoint> {
        self.cells.iter().filter_map(|c| c.outcome.as_ref().ok())
    }

    /// Smallest F1 loss over the successful cells matching `filter`.
    pub fn min_loss(&self, filter: impl Fn(&SchemeConfig) -> bool) -> Option<f64> {
        self.points().filter(|p| filter(&p.scheme)).map(|p| p.f1_loss_percent).min_by(f64::total_cmp)
    }
}

/// SHA-256 of the dataset's binary serialisation, as lowercase hex.
pub fn dataset_fingerprint(dataset: &CsiDataset) -> Result<String> {
    let mut bytes = Vec::new();
    write_binary(dataset, &mut bytes)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Runs every grid cell against one uncompressed baseline. Cells run on up to
/// `jobs` threads (all cores when `None`); results do not depend on
/// scheduling. Per-cell failures are recorded and the sweep continues.
pub fn sweep(dataset: &CsiDataset, grid: &SweepGrid, config: ExperimentConfig, jobs: Option<usize>) -> Result<SweepResult> {
    let cells = grid.cells()?;
    let dataset_sha256 = dataset_fingerprint(dataset)?;
    let seed = config.seed;
    let exp = Experiment::prepare(dataset, config)?;
    let baseline = exp.baseline()?;
    let run = || -> Vec<SweepCell> {
        cells
            .par_iter()
            .map(|&scheme| SweepCell { scheme, outcome: exp.point(scheme, baseline.f1).map_err(|e| e.to_string()) })
            .collect()
    };
    let cells = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::config(e.to_string()))?
            .install(run),
        None => run(),
    };
    for c in &cells {
        if let Err(e) = &c.outcome {
            log::warn!("cell {} failed: {e}", c.scheme);
        }
    }
    Ok(SweepResult {
        baseline_f1: baseline.f1,
        uncompressed_bits_per_frame: baseline.rate.uncompressed_bits_per_frame,
        cells,
        seed,
        dataset_sha256,
        grid: grid.clone(),
        config: exp.config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_sizes() {
        let g = SweepGrid::default_for(ClassifierKind::Threshold);
        // SQ and VQ: 8 each; PCA variants: 4 n_pca x 8 bits each
        assert_eq!(g.cells().unwrap().len(), 8 + 8 + 32 + 32);
        let g = SweepGrid::default_for(ClassifierKind::Mlp);
        assert_eq!(g.cells().unwrap().len(), 8 * 4 + 64);
    }

    #[test]
    fn sq_bits_per_frame_column() {
        let g = SweepGrid::new(&[Variant::SqOnly], (1..=8).collect(), vec![]);
        let bpf: Vec<u64> = g.cells().unwrap().iter().map(|c| c.bits_per_frame(56)).collect();
        assert_eq!(bpf, (1..=8).map(|b| 56 * b).collect::<Vec<_>>());
    }

    #[test]
    fn uncompressed_not_allowed_in_grid() {
        let g = SweepGrid::new(&[Variant::Uncompressed], vec![1], vec![]);
        assert!(g.cells().is_err());
    }
}
