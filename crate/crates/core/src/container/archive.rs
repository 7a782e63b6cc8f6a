//! `CSIZ` compressed containers.
//!
//! Layout (little-endian): magic `CSIZ`, version u16, then the scheme
//! (variant u8, n_pca u32 with 0 meaning none, bits u8, frame dimension
//! u32), the embedded models (count u8, then per model a u64 byte length and
//! a `CSIM` image: normaliser, then the PCA/VAE transform if any, then the
//! quantiser), the frame count u64, index fields per frame u32, field width
//! u8, the packed index stream (u64 byte length, then fields MSB first), and
//! an optional side-info block (flag u8; JSON metadata with u32 length, then
//! f64 timestamps and u16 labels per frame).

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::bitpack;
use super::model::{decode_model, encode_model, Dec, Enc, Model};
use crate::dataset::{CsiDataset, DatasetMeta, Normalizer};
use crate::error::{Error, Result};
use crate::scheme::{FittedScheme, Quantizer, RateReport, SchemeConfig, Transform, Variant};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"CSIZ";
const VERSION: u16 = 1;

/// Per-frame data and channel metadata needed to rebuild a CSI file.
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfo {
    pub meta: DatasetMeta,
    pub class_names: Vec<String>,
    pub timestamps: Vec<f64>,
    pub labels: Vec<u16>,
}

#[derive(Serialize, Deserialize)]
struct SideJson {
    frame_rate: f64,
    channel_width_mhz: u32,
    guards: Vec<usize>,
    source_indices: Vec<usize>,
    class_names: Vec<String>,
}

/// A fitted scheme, its normaliser and an index stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub scheme: FittedScheme,
    pub normalizer: Normalizer,
    pub indices: Vec<Vec<u16>>,
    pub side: Option<SideInfo>,
}

impl Archive {
    /// Models only, no frames.
    pub fn model_pack(scheme: FittedScheme, normalizer: Normalizer) -> Result<Self> {
        check_pair(&scheme, &normalizer)?;
        Ok(Archive { scheme, normalizer, indices: Vec::new(), side: None })
    }

    /// Normalises and encodes every frame of an amplitude dataset.
    pub fn compress(dataset: &CsiDataset, scheme: FittedScheme, normalizer: Normalizer) -> Result<Self> {
        check_pair(&scheme, &normalizer)?;
        let normalized = normalizer.apply(dataset.amplitudes().view())?;
        let indices = scheme.encode(normalized.view())?;
        let side = SideInfo {
            meta: dataset.meta.clone(),
            class_names: dataset.class_names.clone(),
            timestamps: dataset.timestamps.clone(),
            labels: dataset.labels.clone(),
        };
        Ok(Archive { scheme, normalizer, indices, side: Some(side) })
    }

    pub fn frame_count(&self) -> usize {
        self.indices.len()
    }

    pub fn rate(&self) -> RateReport {
        self.scheme.rate()
    }

    /// Size of the embedded models in bits (for amortised rates).
    pub fn model_bits(&self) -> u64 {
        self.models().iter().map(|m| super::model::model_to_bytes(m).len() as u64 * 8).sum()
    }

    fn models(&self) -> Vec<Model> {
        let mut models = vec![Model::Normalizer(self.normalizer.clone())];
        match &self.scheme.transform {
            Transform::Identity => {}
            Transform::Pca(p) => models.push(Model::Pca(p.clone())),
            Transform::Vae(v) => models.push(Model::Vae(v.clone())),
        }
        match &self.scheme.quantizer {
            Quantizer::None => {}
            Quantizer::Scalar(c) => models.push(Model::Scalar(c.clone())),
            Quantizer::Vector(v) => models.push(Model::Vector(v.clone())),
        }
        models
    }

    /// Dequantised coordinates (PCA coefficients, latent parameters or
    /// normalised frames).
    pub fn coordinates(&self) -> Result<Array2<f64>> {
        self.scheme.dequantize(&self.indices)
    }

    /// Reconstructed amplitudes, clamped at zero.
    pub fn decode_amplitudes(&self) -> Result<Array2<f64>> {
        let normalized = self.scheme.decode(&self.indices)?;
        Ok(self.normalizer.invert(normalized.view())?.mapv(|v| v.max(0.0)))
    }

    /// Rebuilds an amplitude dataset from the reconstructed frames.
    pub fn to_dataset(&self) -> Result<CsiDataset> {
        let amps = self.decode_amplitudes()?;
        let n = amps.nrows();
        match &self.side {
            Some(s) => CsiDataset::new(
                s.timestamps.clone(),
                crate::dataset::Samples::Amplitude(amps),
                s.labels.clone(),
                s.class_names.clone(),
                s.meta.clone(),
            ),
            None => CsiDataset::from_amplitudes(amps, vec![0; n], DatasetMeta::new(self.scheme.dim, 0.0, 0)),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut e = Enc::default();
        e.bytes(ARCHIVE_MAGIC);
        e.u16(VERSION);
        let cfg = self.scheme.config;
        e.u8(cfg.variant.code());
        e.u32(cfg.n_pca.unwrap_or(0));
        e.u8(cfg.bits);
        e.u32(self.scheme.dim);
        let models = self.models();
        e.u8(models.len() as u8);
        for m in &models {
            let mut me = Enc::default();
            encode_model(m, &mut me);
            e.u64(me.0.len() as u64);
            e.bytes(&me.0);
        }
        let fields = self.scheme.fields_per_frame();
        e.u64(self.indices.len() as u64);
        e.u32(fields);
        e.u8(cfg.bits);
        let mut flat = Vec::with_capacity(self.indices.len() * fields);
        for row in &self.indices {
            if row.len() != fields {
                return Err(Error::shape(format!("{} index fields in a frame, expected {fields}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        let packed = bitpack::pack(&flat, cfg.bits)?;
        e.u64(packed.len() as u64);
        e.bytes(&packed);
        match &self.side {
            None => e.u8(0),
            Some(s) => {
                if s.timestamps.len() != self.indices.len() || s.labels.len() != self.indices.len() {
                    return Err(Error::shape("side info length differs from frame count"));
                }
                e.u8(1);
                let json = SideJson {
                    frame_rate: s.meta.frame_rate,
                    channel_width_mhz: s.meta.channel_width_mhz,
                    guards: s.meta.guard_mask.iter().enumerate().filter(|g| *g.1).map(|g| g.0).collect(),
                    source_indices: s.meta.source_indices.clone(),
                    class_names: s.class_names.clone(),
                };
                let json = serde_json::to_vec(&json).map_err(|err| Error::format(err.to_string()))?;
                e.u32(json.len());
                e.bytes(&json);
                e.f64s(s.timestamps.iter());
                for &l in &s.labels {
                    e.u16(l);
                }
            }
        }
        Ok(e.0)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut d = Dec::new(bytes);
        if d.take(4)? != ARCHIVE_MAGIC {
            return Err(Error::format("bad magic, expected CSIZ"));
        }
        let version = d.u16()?;
        if version != VERSION {
            return Err(Error::format(format!("unsupported CSIZ version {version}")));
        }
        let code = d.u8()?;
        let variant = Variant::from_code(code).ok_or_else(|| Error::format(format!("unknown scheme code {code}")))?;
        let n_pca = match d.u32()? {
            0 => None,
            n => Some(n),
        };
        let config = SchemeConfig { variant, n_pca, bits: d.u8()? };
        config.validate().map_err(|e| Error::format(e.to_string()))?;
        let dim = d.u32()?;

        let count = d.u8()?;
        let mut normalizer = None;
        let mut transform = Transform::Identity;
        let mut quantizer = Quantizer::None;
        for _ in 0..count {
            let len = d.u64()? as usize;
            let mut md = Dec::new(d.take(len)?);
            match decode_model(&mut md)? {
                Model::Normalizer(n) => normalizer = Some(n),
                Model::Pca(p) => transform = Transform::Pca(p),
                Model::Vae(v) => transform = Transform::Vae(v),
                Model::Scalar(c) => quantizer = Quantizer::Scalar(c),
                Model::Vector(v) => quantizer = Quantizer::Vector(v),
                m => return Err(Error::format(format!("a {} cannot be part of a scheme", m.kind_name()))),
            }
        }
        let normalizer = normalizer.ok_or_else(|| Error::format("container lacks a normaliser"))?;
        let scheme = FittedScheme { config, dim, transform, quantizer };
        check_pair(&scheme, &normalizer).map_err(|e| Error::format(e.to_string()))?;

        let frames = d.u64()? as usize;
        let fields = d.u32()?;
        let bits = d.u8()?;
        if fields != scheme.fields_per_frame() || bits != config.bits {
            return Err(Error::format("index layout disagrees with the scheme"));
        }
        let len = d.u64()? as usize;
        let total = frames.checked_mul(fields).ok_or_else(|| Error::format("frame count overflow"))?;
        let flat = bitpack::unpack(d.take(len)?, bits, total)?;
        let indices: Vec<Vec<u16>> = if fields == 0 { vec![Vec::new(); frames] } else { flat.chunks(fields).map(<[u16]>::to_vec).collect() };

        let side = match d.u8()? {
            0 => None,
            1 => {
                let len = d.u32()?;
                let j: SideJson =
                    serde_json::from_slice(d.take(len)?).map_err(|e| Error::format(format!("bad side info: {e}")))?;
                let timestamps = d.f64s(frames)?;
                let labels = (0..frames).map(|_| d.u16()).collect::<Result<Vec<_>>>()?;
                let mut meta = DatasetMeta::new(dim, j.frame_rate, j.channel_width_mhz);
                for g in j.guards {
                    *meta.guard_mask.get_mut(g).ok_or_else(|| Error::format("guard index beyond D"))? = true;
                }
                if j.source_indices.len() == dim {
                    meta.source_indices = j.source_indices;
                }
                Some(SideInfo { meta, class_names: j.class_names, timestamps, labels })
            }
            f => return Err(Error::format(format!("bad side-info flag {f}"))),
        };
        if !d.is_empty() {
            return Err(Error::format("trailing bytes after container"));
        }
        Ok(Archive { scheme, normalizer, indices, side })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Archive::from_bytes(&fs::read(path)?)
    }
}

fn check_pair(scheme: &FittedScheme, normalizer: &Normalizer) -> Result<()> {
    if scheme.config.variant == Variant::Uncompressed {
        return Err(Error::config("the uncompressed scheme cannot be stored as an index stream"));
    }
    if normalizer.dim() != scheme.dim {
        return Err(Error::shape(format!("normaliser has {} dimensions, scheme {}", normalizer.dim(), scheme.dim)));
    }
    let ok = match (&scheme.config.variant, &scheme.transform, &scheme.quantizer) {
        (Variant::SqOnly, Transform::Identity, Quantizer::Scalar(c)) => c.dim() == scheme.dim,
        (Variant::VqOnly, Transform::Identity, Quantizer::Vector(v)) => v.dim() == scheme.dim,
        (Variant::PcaSq, Transform::Pca(p), Quantizer::Scalar(c)) => {
            p.input_dim() == scheme.dim && Some(p.n_components()) == scheme.config.n_pca && c.dim() == p.n_components()
        }
        (Variant::PcaVq, Transform::Pca(p), Quantizer::Vector(v)) => {
            p.input_dim() == scheme.dim && Some(p.n_components()) == scheme.config.n_pca && v.dim() == p.n_components()
        }
        (Variant::VaeSq, Transform::Vae(m), Quantizer::Scalar(c)) => m.input_dim() == scheme.dim && c.dim() == crate::vae::CODE_LEN,
        (Variant::VaeVq, Transform::Vae(m), Quantizer::Vector(v)) => m.input_dim() == scheme.dim && v.dim() == crate::vae::CODE_LEN,
        _ => false,
    };
    let bits_ok = match &scheme.quantizer {
        Quantizer::Scalar(c) => c.bits == scheme.config.bits,
        Quantizer::Vector(v) => v.bits == scheme.config.bits,
        Quantizer::None => false,
    };
    if !(ok && bits_ok) {
        return Err(Error::shape(format!("models do not match scheme {}", scheme.config)));
    }
    Ok(())
}
