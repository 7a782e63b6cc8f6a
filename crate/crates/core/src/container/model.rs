//! `CSIM` model files.
//!
//! Layout (little-endian): magic `CSIM`, version u16, model kind u8, then a
//! kind-specific block of u32 dimensions followed by raw f64 payload.
//!
//! | kind | model | block |
//! |------|-------|-------|
//! | 1 | PCA | n, D, mean[D], components[n·D], explained[n], total |
//! | 2 | scalar codec | D, bits, per dimension: degenerate u8, levels[2^bits] |
//! | 3 | vector quantiser | k, D, bits, codebook[k·D] |
//! | 4 | VAE | encoder layers, decoder layers, each layer as below |
//! | 5 | threshold | threshold, training F1, degenerate u8 |
//! | 6 | MLP | layer count, layers, D, feature mean[D], feature std[D] |
//! | 7 | normaliser | D, mean[D], std[D], constant u8[D] |
//!
//! A dense layer is `out u32, in u32, weights[out·in] (row-major), bias[out]`.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::classic::{PcaModel, ScalarCodec, ScalarQuantizer, VectorQuantizer};
use crate::dataset::Normalizer;
use crate::error::{Error, Result};
use crate::nn::Dense;
use crate::sensing::{MlpClassifier, ThresholdClassifier};
use crate::vae::VaeModel;

pub const MODEL_MAGIC: &[u8; 4] = b"CSIM";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Pca(PcaModel),
    Scalar(ScalarCodec),
    Vector(VectorQuantizer),
    Vae(VaeModel),
    Threshold(ThresholdClassifier),
    Mlp(MlpClassifier),
    Normalizer(Normalizer),
}

impl Model {
    pub fn kind(&self) -> u8 {
        match self {
            Model::Pca(_) => 1,
            Model::Scalar(_) => 2,
            Model::Vector(_) => 3,
            Model::Vae(_) => 4,
            Model::Threshold(_) => 5,
            Model::Mlp(_) => 6,
            Model::Normalizer(_) => 7,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Model::Pca(_) => "pca",
            Model::Scalar(_) => "scalar quantiser",
            Model::Vector(_) => "vector quantiser",
            Model::Vae(_) => "vae",
            Model::Threshold(_) => "threshold classifier",
            Model::Mlp(_) => "mlp classifier",
            Model::Normalizer(_) => "normaliser",
        }
    }
}

/// Little-endian byte sink.
#[derive(Default)]
pub(crate) struct Enc(pub Vec<u8>);

impl Enc {
    pub fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    pub fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64s<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) {
        for v in vs {
            self.f64(*v);
        }
    }
    pub fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
}

/// Little-endian byte source; running out of input is a format error.
pub(crate) struct Dec<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Dec<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Dec { buf, pos: 0 }
    }
    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| Error::format("file truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }
    pub fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }
    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::format("length overflow"))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
    pub fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let n = rows.checked_mul(cols).ok_or_else(|| Error::format("length overflow"))?;
        Array2::from_shape_vec((rows, cols), self.f64s(n)?).map_err(|e| Error::format(e.to_string()))
    }
    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn put_layers(e: &mut Enc, layers: &[Dense]) {
    for l in layers {
        e.u32(l.outputs());
        e.u32(l.inputs());
        e.f64s(l.weights.iter());
        e.f64s(l.bias.iter());
    }
}

fn get_layers(d: &mut Dec<'_>, count: usize) -> Result<Vec<Dense>> {
    let mut out: Vec<Dense> = Vec::with_capacity(count.min(64));
    for _ in 0..count {
        let (o, i) = (d.u32()?, d.u32()?);
        if let Some(prev) = out.last() {
            if prev.outputs() != i {
                return Err(Error::format("consecutive layer widths disagree"));
            }
        }
        let weights = d.matrix(o, i)?;
        let bias = Array1::from(d.f64s(o)?);
        out.push(Dense { weights, bias });
    }
    Ok(out)
}

pub(crate) fn encode_model(model: &Model, e: &mut Enc) {
    e.bytes(MODEL_MAGIC);
    e.u16(VERSION);
    e.u8(model.kind());
    match model {
        Model::Pca(p) => {
            e.u32(p.n_components());
            e.u32(p.input_dim());
            e.f64s(p.mean.iter());
            e.f64s(p.components.iter());
            e.f64s(p.explained_variance.iter());
            e.f64(p.total_variance);
        }
        Model::Scalar(c) => {
            e.u32(c.quantizers.len());
            e.u8(c.bits);
            for q in &c.quantizers {
                e.u8(q.degenerate as u8);
                e.f64s(q.levels.iter());
            }
        }
        Model::Vector(v) => {
            e.u32(v.size());
            e.u32(v.dim());
            e.u8(v.bits);
            e.f64s(v.codebook.iter());
        }
        Model::Vae(m) => {
            e.u32(m.encoder.len());
            e.u32(m.decoder.len());
            put_layers(e, &m.encoder);
            put_layers(e, &m.decoder);
        }
        Model::Threshold(t) => {
            e.f64(t.threshold);
            e.f64(t.training_f1);
            e.u8(t.degenerate as u8);
        }
        Model::Mlp(m) => {
            e.u32(m.layers.len());
            put_layers(e, &m.layers);
            e.u32(m.input_dim());
            e.f64s(m.feature_mean.iter());
            e.f64s(m.feature_std.iter());
        }
        Model::Normalizer(n) => {
            e.u32(n.dim());
            e.f64s(n.mean.iter());
            e.f64s(n.std.iter());
            for &c in &n.constant {
                e.u8(c as u8);
            }
        }
    }
}

pub(crate) fn decode_model(d: &mut Dec<'_>) -> Result<Model> {
    if d.take(4)? != MODEL_MAGIC {
        return Err(Error::format("bad model magic, expected CSIM"));
    }
    let version = d.u16()?;
    if version != VERSION {
        return Err(Error::format(format!("unsupported CSIM version {version}")));
    }
    let kind = d.u8()?;
    Ok(match kind {
        1 => {
            let (n, dim) = (d.u32()?, d.u32()?);
            let mean = Array1::from(d.f64s(dim)?);
            let components = d.matrix(n, dim)?;
            let explained_variance = Array1::from(d.f64s(n)?);
            let total_variance = d.f64()?;
            Model::Pca(PcaModel { mean, components, explained_variance, total_variance })
        }
        2 => {
            let dim = d.u32()?;
            let bits = d.u8()?;
            if !(1..=8).contains(&bits) {
                return Err(Error::format(format!("scalar codec with {bits} bits")));
            }
            let mut quantizers = Vec::with_capacity(dim.min(1 << 16));
            for _ in 0..dim {
                let degenerate = d.u8()? != 0;
                let mut q = ScalarQuantizer::from_levels(d.f64s(1 << bits)?, bits)?;
                q.degenerate = degenerate;
                quantizers.push(q);
            }
            Model::Scalar(ScalarCodec { quantizers, bits })
        }
        3 => {
            let (k, dim) = (d.u32()?, d.u32()?);
            let bits = d.u8()?;
            Model::Vector(VectorQuantizer::from_codebook(d.matrix(k, dim)?, bits)?)
        }
        4 => {
            let (ne, nd) = (d.u32()?, d.u32()?);
            let encoder = get_layers(d, ne)?;
            let decoder = get_layers(d, nd)?;
            if encoder.is_empty() || decoder.is_empty() {
                return Err(Error::format("VAE without layers"));
            }
            Model::Vae(VaeModel { encoder, decoder })
        }
        5 => {
            let threshold = d.f64()?;
            let training_f1 = d.f64()?;
            let degenerate = d.u8()? != 0;
            Model::Threshold(ThresholdClassifier { threshold, training_f1, degenerate })
        }
        6 => {
            let n = d.u32()?;
            let layers = get_layers(d, n)?;
            let dim = d.u32()?;
            let feature_mean = Array1::from(d.f64s(dim)?);
            let feature_std = Array1::from(d.f64s(dim)?);
            if layers.first().is_none_or(|l| l.inputs() != dim) {
                return Err(Error::format("MLP input width disagrees with its feature scaling"));
            }
            Model::Mlp(MlpClassifier { layers, feature_mean, feature_std })
        }
        7 => {
            let dim = d.u32()?;
            let mean = Array1::from(d.f64s(dim)?);
            let std = Array1::from(d.f64s(dim)?);
            let constant = d.take(dim)?.iter().map(|&b| b != 0).collect();
            Model::Normalizer(Normalizer { mean, std, constant })
        }
        k => return Err(Error::format(format!("unknown model kind {k}"))),
    })
}

pub fn model_to_bytes(model: &Model) -> Vec<u8> {
    let mut e = Enc::default();
    encode_model(model, &mut e);
    e.0
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<Model> {
    let mut d = Dec::new(bytes);
    let m = decode_model(&mut d)?;
    if !d.is_empty() {
        return Err(Error::format("trailing bytes after model"));
    }
    Ok(m)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    model_from_bytes(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn header_layout() {
        let t = Model::Threshold(ThresholdClassifier { threshold: 0.5, training_f1: 1.0, degenerate: false });
        let b = model_to_bytes(&t);
        assert_eq!(&b[..4], b"CSIM");
        assert_eq!(u16::from_le_bytes([b[4], b[5]]), 1);
        assert_eq!(b[6], 5);
        assert_eq!(b.len(), 7 + 8 + 8 + 1);
        assert_eq!(model_from_bytes(&b).unwrap(), t);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(model_from_bytes(b"CSIX\x01\x00\x05"), Err(Error::Format(_))));
        assert!(matches!(model_from_bytes(b"CSIM\x01\x00\x63"), Err(Error::Format(_))));
        let mut b = model_to_bytes(&Model::Vector(VectorQuantizer::from_codebook(array![[0.0], [1.0]], 1).unwrap()));
        b.pop();
        assert!(matches!(model_from_bytes(&b), Err(Error::Format(_))));
    }
}
