//! Compression schemes built from the classic and neural coders, and exact
//! per-frame rate accounting.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};

use crate::classic::{PcaModel, ScalarCodec, VectorQuantizer};
use crate::dataset::DatasetMeta;
use crate::error::{Error, Result};
use crate::vae::{self, LatentMode, LatentQuantizer, TrainConfig, VaeModel};

/// Bits used to store one uncompressed value.
pub const FLOAT_BITS: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Baseline: 32-bit floats, no coding.
    Uncompressed,
    SqOnly,
    VqOnly,
    PcaSq,
    PcaVq,
    VaeSq,
    VaeVq,
}

impl Variant {
    pub const COMPRESSED: [Variant; 6] =
        [Variant::SqOnly, Variant::VqOnly, Variant::PcaSq, Variant::PcaVq, Variant::VaeSq, Variant::VaeVq];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Uncompressed => "uncompressed",
            Variant::SqOnly => "sq_only",
            Variant::VqOnly => "vq_only",
            Variant::PcaSq => "pca_sq",
            Variant::PcaVq => "pca_vq",
            Variant::VaeSq => "vae_sq",
            Variant::VaeVq => "vae_vq",
        }
    }

    pub fn uses_pca(self) -> bool {
        matches!(self, Variant::PcaSq | Variant::PcaVq)
    }

    pub fn uses_vae(self) -> bool {
        matches!(self, Variant::VaeSq | Variant::VaeVq)
    }

    pub fn is_vector(self) -> bool {
        matches!(self, Variant::VqOnly | Variant::PcaVq | Variant::VaeVq)
    }

    pub(crate) fn code(self) -> u8 {
        self as u8
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        [Variant::Uncompressed].iter().chain(&Variant::COMPRESSED).copied().find(|v| v.code() == code)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        [Variant::Uncompressed]
            .iter()
            .chain(&Variant::COMPRESSED)
            .copied()
            .find(|v| v.name() == norm || (norm == "sq" && *v == Variant::SqOnly) || (norm == "vq" && *v == Variant::VqOnly))
            .ok_or_else(|| Error::config(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SchemeConfig {
    pub variant: Variant,
    /// Retained principal components; present exactly for the PCA variants.
    pub n_pca: Option<usize>,
    /// Bits per value (scalar variants) or per frame (vector variants).
    pub bits: u8,
}

impl SchemeConfig {
    pub fn new(variant: Variant, n_pca: Option<usize>, bits: u8) -> Result<Self> {
        let cfg = SchemeConfig { variant, n_pca, bits };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn uncompressed() -> Self {
        SchemeConfig { variant: Variant::Uncompressed, n_pca: None, bits: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.variant.uses_pca() != self.n_pca.is_some() {
            return Err(Error::config(format!("n_pca must be given exactly for PCA schemes ({})", self.variant)));
        }
        if self.n_pca == Some(0) {
            return Err(Error::config("n_pca must be positive"));
        }
        if self.variant == Variant::Uncompressed {
            if self.bits != 0 {
                return Err(Error::config("the uncompressed scheme takes no bit budget"));
            }
        } else if !(1..=8).contains(&self.bits) {
            return Err(Error::config(format!("bits must be in 1..=8, got {}", self.bits)));
        }
        Ok(())
    }

    /// Index fields stored per frame for an input of dimension `d`.
    pub fn fields_per_frame(&self, d: usize) -> usize {
        match self.variant {
            Variant::Uncompressed => 0,
            Variant::SqOnly => d,
            Variant::PcaSq => self.n_pca.unwrap_or(0),
            Variant::VaeSq => vae::CODE_LEN,
            Variant::VqOnly | Variant::PcaVq | Variant::VaeVq => 1,
        }
    }

    pub fn bits_per_frame(&self, d: usize) -> u64 {
        match self.variant {
            Variant::Uncompressed => d as u64 * FLOAT_BITS,
            _ => self.fields_per_frame(d) as u64 * self.bits as u64,
        }
    }

    pub fn rate(&self, d: usize) -> RateReport {
        RateReport::new(self.bits_per_frame(d), d as u64 * FLOAT_BITS)
    }
}

impl fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.n_pca {
            Some(n) => write!(f, "{}(n_pca={n}, bits={})", self.variant, self.bits),
            None => write!(f, "{}(bits={})", self.variant, self.bits),
        }
    }
}

/// Bits per frame before and after compression. Both are integers, so the
/// ratio is an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RateReport {
    pub bits_per_frame: u64,
    pub uncompressed_bits_per_frame: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl RateReport {
    pub fn new(bits_per_frame: u64, uncompressed_bits_per_frame: u64) -> Self {
        RateReport { bits_per_frame, uncompressed_bits_per_frame }
    }

    /// `uncompressed / compressed` in lowest terms.
    pub fn ratio_fraction(&self) -> (u64, u64) {
        let g = gcd(self.uncompressed_bits_per_frame, self.bits_per_frame).max(1);
        (self.uncompressed_bits_per_frame / g, self.bits_per_frame / g)
    }

    pub fn compression_ratio(&self) -> f64 {
        self.uncompressed_bits_per_frame as f64 / self.bits_per_frame as f64
    }

    /// Bits per frame when `model_bits` of stored models are shared by
    /// `frames` frames.
    pub fn amortized_bits_per_frame(&self, model_bits: u64, frames: u64) -> f64 {
        self.bits_per_frame as f64 + model_bits as f64 / frames.max(1) as f64
    }
}

/// Uncompressed storage per frame: one 32-bit float per retained subcarrier.
pub fn uncompressed_rate(meta: &DatasetMeta) -> u64 {
    meta.subcarrier_count as u64 * FLOAT_BITS
}

/// Architecture and optimiser settings for the VAE inside a scheme.
///
/// `train.kl_weight` is β relative to a unit-variance Gaussian likelihood:
/// since the training loss uses the per-value MSE, [`VaeSettings::fit`] passes
/// `2β / D` to the optimiser (`½‖x − x̂‖² + β·KL = (D/2)·(MSE + 2β/D·KL)`).
#[derive(Debug, Clone, PartialEq)]
pub struct VaeSettings {
    /// Encoder hidden widths (the decoder mirrors them).
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
}

impl VaeSettings {
    pub fn presence() -> Self {
        VaeSettings {
            hidden: vec![64, 32],
            train: TrainConfig { epochs: 40, batch_size: 64, learning_rate: 0.02, kl_weight: 1.0, seed: 0 },
        }
    }

    pub fn activity() -> Self {
        VaeSettings {
            hidden: vec![256, 64],
            train: TrainConfig { epochs: 15, batch_size: 64, learning_rate: 0.01, kl_weight: 1.0, seed: 0 },
        }
    }

    /// Initialises and trains a VAE on `train` (normalised frames).
    pub fn fit(&self, train: ArrayView2<'_, f64>, seed: u64) -> Result<VaeModel> {
        let mut sizes = vec![train.ncols()];
        sizes.extend(&self.hidden);
        let mut model = VaeModel::with_layers(&sizes, seed)?;
        let kl_weight = 2.0 * self.train.kl_weight / train.ncols().max(1) as f64;
        model.train(train, &TrainConfig { seed, kl_weight, ..self.train })?;
        Ok(model)
    }
}

/// Dimensionality-reducing stage applied before quantisation.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Identity,
    Pca(PcaModel),
    Vae(VaeModel),
}

/// Quantisation stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Quantizer {
    None,
    Scalar(ScalarCodec),
    Vector(VectorQuantizer),
}

/// A scheme whose models have been trained.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedScheme {
    pub config: SchemeConfig,
    /// Frame dimension `D`.
    pub dim: usize,
    pub transform: Transform,
    pub quantizer: Quantizer,
}

impl FittedScheme {
    /// Fits every model of `config` on `train`. VAE variants take the trained
    /// network in `vae`, so one network can serve several bit budgets.
    pub fn fit(config: SchemeConfig, train: ArrayView2<'_, f64>, seed: u64, vae: Option<&VaeModel>) -> Result<Self> {
        config.validate()?;
        let dim = train.ncols();
        if train.nrows() == 0 {
            return Err(Error::InsufficientData("no training frames".into()));
        }
        let transform = match config.variant {
            Variant::PcaSq | Variant::PcaVq => Transform::Pca(PcaModel::fit(train, config.n_pca.expect("validated"))?),
            Variant::VaeSq | Variant::VaeVq => {
                let model = vae.ok_or_else(|| Error::config("VAE schemes need a trained VAE"))?;
                if model.input_dim() != dim {
                    return Err(Error::shape(format!("VAE expects {} inputs, frames have {dim}", model.input_dim())));
                }
                Transform::Vae(model.clone())
            }
            _ => Transform::Identity,
        };
        let coords = forward(&transform, train)?;
        let quantizer = match config.variant {
            Variant::Uncompressed => Quantizer::None,
            Variant::SqOnly | Variant::PcaSq => Quantizer::Scalar(ScalarCodec::fit(coords.view(), config.bits)?),
            Variant::VqOnly | Variant::PcaVq => Quantizer::Vector(VectorQuantizer::fit(coords.view(), config.bits, seed)?),
            Variant::VaeSq | Variant::VaeVq => {
                let mode = if config.variant == Variant::VaeSq { LatentMode::Scalar } else { LatentMode::Vector };
                match LatentQuantizer::fit(coords.view(), mode, config.bits, seed)? {
                    LatentQuantizer::Scalar(c) => Quantizer::Scalar(c),
                    LatentQuantizer::Vector(v) => Quantizer::Vector(v),
                }
            }
        };
        Ok(FittedScheme { config, dim, transform, quantizer })
    }

    pub fn rate(&self) -> RateReport {
        self.config.rate(self.dim)
    }

    pub fn fields_per_frame(&self) -> usize {
        self.config.fields_per_frame(self.dim)
    }

    fn check(&self, frames: ArrayView2<'_, f64>) -> Result<()> {
        if frames.ncols() != self.dim {
            return Err(Error::shape(format!("frames have {} values, scheme expects {}", frames.ncols(), self.dim)));
        }
        Ok(())
    }

    /// Quantisation indices, one list of fields per frame.
    pub fn encode(&self, frames: ArrayView2<'_, f64>) -> Result<Vec<Vec<u16>>> {
        self.check(frames)?;
        let coords = forward(&self.transform, frames)?;
        match &self.quantizer {
            Quantizer::None => Err(Error::config("the uncompressed scheme has no index stream")),
            Quantizer::Scalar(c) => c.encode_rows(coords.view()),
            Quantizer::Vector(v) => Ok(v.encode_rows(coords.view())?.into_iter().map(|i| vec![i]).collect()),
        }
    }

    /// Dequantised coordinates in the transform's space: PCA coefficients,
    /// `(μ1, μ2, σ1, σ2)` for VAE schemes, frames otherwise.
    pub fn dequantize(&self, codes: &[Vec<u16>]) -> Result<Array2<f64>> {
        let fields = self.fields_per_frame();
        if let Some(bad) = codes.iter().find(|c| c.len() != fields) {
            return Err(Error::shape(format!("{} index fields per frame, expected {fields}", bad.len())));
        }
        match &self.quantizer {
            Quantizer::None => Err(Error::config("the uncompressed scheme has no index stream")),
            Quantizer::Scalar(c) => c.decode_rows(codes),
            Quantizer::Vector(v) => v.decode_rows(&codes.iter().map(|c| c[0]).collect::<Vec<_>>()),
        }
    }

    /// Maps dequantised coordinates back to `D`-dimensional frames.
    pub fn reconstruct(&self, coords: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match &self.transform {
            Transform::Identity => Ok(coords.to_owned()),
            Transform::Pca(p) => p.reconstruct_rows(coords),
            Transform::Vae(m) => m.decode_rows(vae::params_to_z(coords).view()),
        }
    }

    pub fn decode(&self, codes: &[Vec<u16>]) -> Result<Array2<f64>> {
        self.reconstruct(self.dequantize(codes)?.view())
    }

    /// Encodes and decodes `frames`, returning the dequantised coordinates
    /// and the reconstructed frames. The uncompressed scheme passes frames
    /// through unchanged.
    pub fn round_trip(&self, frames: ArrayView2<'_, f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        self.check(frames)?;
        if let Quantizer::None = self.quantizer {
            return Ok((frames.to_owned(), frames.to_owned()));
        }
        let coords = self.dequantize(&self.encode(frames)?)?;
        let decoded = self.reconstruct(coords.view())?;
        Ok((coords, decoded))
    }
}

fn forward(transform: &Transform, frames: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    match transform {
        Transform::Identity => Ok(frames.to_owned()),
        Transform::Pca(p) => p.project_rows(frames),
        Transform::Vae(m) => m.latent_params(frames),
    }
}

/// Compressed stream of a scheme applied to `eval` after fitting on `train`.
#[derive(Debug, Clone, PartialEq)]
pub struct Compressed {
    pub scheme: FittedScheme,
    pub indices: Vec<Vec<u16>>,
    pub decoded: Array2<f64>,
    pub rate: RateReport,
}

/// Fits `config` on `train` and compresses `eval`. VAE variants train their
/// network with `vae_settings`.
pub fn scheme_compress(
    config: SchemeConfig,
    train: ArrayView2<'_, f64>,
    eval: ArrayView2<'_, f64>,
    seed: u64,
    vae_settings: Option<&VaeSettings>,
) -> Result<Compressed> {
    let vae = if config.variant.uses_vae() {
        let settings = vae_settings.cloned().unwrap_or_else(VaeSettings::presence);
        Some(settings.fit(train, seed)?)
    } else {
        None
    };
    let scheme = FittedScheme::fit(config, train, seed, vae.as_ref())?;
    let indices = scheme.encode(eval)?;
    let decoded = scheme.decode(&indices)?;
    let rate = scheme.rate();
    Ok(Compressed { scheme, indices, decoded, rate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::seeded(seed);
        Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn config_invariants() {
        assert!(SchemeConfig::new(Variant::PcaSq, None, 3).is_err());
        assert!(SchemeConfig::new(Variant::SqOnly, Some(2), 3).is_err());
        assert!(SchemeConfig::new(Variant::SqOnly, None, 9).is_err());
        assert!(SchemeConfig::new(Variant::VqOnly, None, 0).is_err());
        assert!(SchemeConfig::new(Variant::PcaVq, Some(2), 8).is_ok());
    }

    #[test]
    fn rate_arithmetic() {
        let sq = SchemeConfig::new(Variant::SqOnly, None, 8).unwrap();
        assert_eq!(sq.bits_per_frame(56), 448);
        let ps = SchemeConfig::new(Variant::PcaSq, Some(2), 3).unwrap();
        assert_eq!(ps.bits_per_frame(56), 6);
        let vq = SchemeConfig::new(Variant::VqOnly, None, 1).unwrap();
        assert_eq!(vq.rate(56).ratio_fraction(), (1792, 1));
        let pv = SchemeConfig::new(Variant::PcaVq, Some(4), 4).unwrap();
        assert_eq!(pv.rate(2048).ratio_fraction(), (16384, 1));
        assert_eq!(SchemeConfig::new(Variant::VaeSq, None, 8).unwrap().bits_per_frame(56), 32);
        assert_eq!(RateReport::new(6, 1792).ratio_fraction(), (896, 3));
        assert_eq!(SchemeConfig::uncompressed().bits_per_frame(56), 1792);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::COMPRESSED.iter().chain(&[Variant::Uncompressed]) {
            assert_eq!(v.name().parse::<Variant>().unwrap(), *v);
            assert_eq!(Variant::from_code(v.code()), Some(*v));
        }
        assert!("pca".parse::<Variant>().is_err());
    }

    #[test]
    fn encode_decode_shapes() {
        let train = random(200, 6, 1);
        for cfg in [
            SchemeConfig::new(Variant::SqOnly, None, 2).unwrap(),
            SchemeConfig::new(Variant::VqOnly, None, 3).unwrap(),
            SchemeConfig::new(Variant::PcaSq, Some(2), 3).unwrap(),
            SchemeConfig::new(Variant::PcaVq, Some(3), 4).unwrap(),
        ] {
            let s = FittedScheme::fit(cfg, train.view(), 5, None).unwrap();
            let idx = s.encode(train.view()).unwrap();
            assert_eq!(idx.len(), 200);
            assert_eq!(idx[0].len(), s.fields_per_frame());
            assert_eq!(s.decode(&idx).unwrap().dim(), (200, 6));
            // decoded frames re-encode to the same indices
            assert_eq!(s.encode(s.decode(&idx).unwrap().view()).unwrap(), idx, "{cfg}");
        }
    }

    #[test]
    fn vae_schemes_need_a_network() {
        let train = random(50, 4, 2);
        let cfg = SchemeConfig::new(Variant::VaeSq, None, 2).unwrap();
        assert!(FittedScheme::fit(cfg, train.view(), 0, None).is_err());
        let vae = VaeModel::init(4, 3, 3, 1).unwrap();
        let s = FittedScheme::fit(cfg, train.view(), 0, Some(&vae)).unwrap();
        let idx = s.encode(train.view()).unwrap();
        assert_eq!(idx[0].len(), 4);
        assert_eq!(s.decode(&idx).unwrap().dim(), (50, 4));
    }

    #[test]
    fn high_rate_full_pca_is_near_identity() {
        let train = random(400, 5, 3);
        let cfg = SchemeConfig::new(Variant::PcaSq, Some(5), 8).unwrap();
        let out = scheme_compress(cfg, train.view(), train.view(), 0, None).unwrap();
        let mse = (&out.decoded - &train).mapv(|v| v * v).mean().unwrap();
        assert!(mse < 1e-3, "mse {mse}");
    }
}
