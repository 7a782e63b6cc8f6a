//! Variational autoencoder that codes one CSI frame as the four parameters
//! `(μ1, μ2, σ1, σ2)` of a two-dimensional Gaussian, trained with
//! hand-derived gradients.

use ndarray::{s, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::classic::{ScalarCodec, VectorQuantizer};
use crate::error::{Error, Result};
use crate::nn::{self, Dense, DenseGrad, GradCheck};
use crate::rng;
use crate::scheme::RateReport;

pub const LATENT_DIM: usize = 2;
/// Stored parameters per frame: two means and two standard deviations.
pub const CODE_LEN: usize = 2 * LATENT_DIM;
pub const LOG_VAR_LIMIT: f64 = 10.0;
/// Bits of an unquantised latent stored as 64-bit floats.
pub const RAW_LATENT_BITS: u64 = CODE_LEN as u64 * 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentCode {
    pub mu: [f64; LATENT_DIM],
    pub log_var: [f64; LATENT_DIM],
}

impl LatentCode {
    pub fn sigma(&self) -> [f64; LATENT_DIM] {
        self.log_var.map(|lv| (0.5 * lv).exp())
    }

    /// `(μ1, μ2, σ1, σ2)`
    pub fn params(&self) -> [f64; CODE_LEN] {
        let s = self.sigma();
        [self.mu[0], self.mu[1], s[0], s[1]]
    }

    pub fn from_params(p: [f64; CODE_LEN]) -> Self {
        let lv = |s: f64| (2.0 * s.max(f64::MIN_POSITIVE).ln()).clamp(-LOG_VAR_LIMIT, LOG_VAR_LIMIT);
        LatentCode { mu: [p[0], p[1]], log_var: [lv(p[2]), lv(p[3])] }
    }

    /// KL divergence from the standard normal prior.
    pub fn kl(&self) -> f64 {
        (0..LATENT_DIM)
            .map(|i| 0.5 * (self.mu[i].powi(2) + self.log_var[i].exp() - self.log_var[i] - 1.0))
            .sum()
    }
}

/// `z = μ + σ ⊙ ε`
pub fn reparameterize(code: &LatentCode, noise: [f64; LATENT_DIM]) -> [f64; LATENT_DIM] {
    let s = code.sigma();
    [code.mu[0] + s[0] * noise[0], code.mu[1] + s[1] * noise[1]]
}

/// Reconstruction MSE plus `beta`-weighted KL term.
pub fn elbo_loss(frame: &[f64], reconstruction: &[f64], code: &LatentCode, beta: f64) -> f64 {
    let mse = frame.iter().zip(reconstruction).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / frame.len().max(1) as f64;
    mse + beta * code.kl()
}

/// Mini-batch gradient-descent settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// β: weight of the KL term (VAE only).
    pub kl_weight: f64,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.learning_rate < 0.0 || self.kl_weight < 0.0 {
            return Err(Error::config("epochs and batch size must be positive, rates non-negative"));
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 30, batch_size: 64, learning_rate: 0.01, kl_weight: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VaeModel {
    /// `D → h1 → h2 → 4` (μ1, μ2, logσ²1, logσ²2)
    pub encoder: Vec<Dense>,
    /// `2 → h2 → h1 → D`
    pub decoder: Vec<Dense>,
}

struct Forward {
    enc: nn::StackTrace,
    dec: nn::StackTrace,
    raw_log_var: Array2<f64>,
    mu: Array2<f64>,
    log_var: Array2<f64>,
    sigma: Array2<f64>,
    recon: Array2<f64>,
}

impl VaeModel {
    /// Scaled-uniform initialisation determined by `seed`.
    pub fn init(input_dim: usize, h1: usize, h2: usize, seed: u64) -> Result<Self> {
        Self::with_layers(&[input_dim, h1, h2], seed)
    }

    /// Encoder widths `sizes` (input first), mirrored by the decoder.
    pub fn with_layers(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::config(format!("VAE layer sizes must be positive, got {sizes:?}")));
        }
        let mut rng = rng::seeded(seed);
        let mut enc_sizes = sizes.to_vec();
        enc_sizes.push(CODE_LEN);
        let mut dec_sizes: Vec<usize> = sizes.iter().rev().cloned().collect();
        dec_sizes.insert(0, LATENT_DIM);
        let encoder = nn::build_stack(&enc_sizes, &mut rng)?;
        let decoder = nn::build_stack(&dec_sizes, &mut rng)?;
        Ok(VaeModel { encoder, decoder })
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].inputs()
    }

    pub fn param_count(&self) -> usize {
        self.encoder.iter().chain(&self.decoder).map(Dense::param_count).sum()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.input_dim() {
            return Err(Error::shape(format!("frame has {d} values, VAE expects {}", self.input_dim())));
        }
        Ok(())
    }

    /// Raw encoder output per row: `μ1, μ2, logσ²1, logσ²2` with the
    /// log-variances clamped.
    pub fn encode_rows(&self, frames: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_dim(frames.ncols())?;
        let (mut out, _) = nn::stack_forward(&self.encoder, frames);
        out.slice_mut(s![.., LATENT_DIM..]).mapv_inplace(|v| v.clamp(-LOG_VAR_LIMIT, LOG_VAR_LIMIT));
        Ok(out)
    }

    pub fn encode(&self, frame: ArrayView1<'_, f64>) -> Result<LatentCode> {
        let out = self.encode_rows(frame.insert_axis(Axis(0)))?;
        Ok(LatentCode { mu: [out[[0, 0]], out[[0, 1]]], log_var: [out[[0, 2]], out[[0, 3]]] })
    }

    /// `(μ1, μ2, σ1, σ2)` per row.
    pub fn latent_params(&self, frames: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut out = self.encode_rows(frames)?;
        out.slice_mut(s![.., LATENT_DIM..]).mapv_inplace(|lv| (0.5 * lv).exp());
        Ok(out)
    }

    pub fn decode_rows(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z.ncols() != LATENT_DIM {
            return Err(Error::shape(format!("latent has {} values, expected {LATENT_DIM}", z.ncols())));
        }
        Ok(nn::stack_forward(&self.decoder, z).0)
    }

    pub fn decode(&self, z: [f64; LATENT_DIM]) -> Vec<f64> {
        let z = Array2::from_shape_vec((1, LATENT_DIM), z.to_vec()).expect("shape");
        nn::stack_forward(&self.decoder, z.view()).0.row(0).to_vec()
    }

    fn forward(&self, x: ArrayView2<'_, f64>, eps: ArrayView2<'_, f64>) -> Forward {
        let (out, enc) = nn::stack_forward(&self.encoder, x);
        let mu = out.slice(s![.., ..LATENT_DIM]).to_owned();
        let raw_log_var = out.slice(s![.., LATENT_DIM..]).to_owned();
        let log_var = raw_log_var.mapv(|v| v.clamp(-LOG_VAR_LIMIT, LOG_VAR_LIMIT));
        let sigma = log_var.mapv(|v| (0.5 * v).exp());
        let z = &mu + &(&sigma * &eps);
        let (recon, dec) = nn::stack_forward(&self.decoder, z.view());
        Forward { enc, dec, raw_log_var, mu, log_var, sigma, recon }
    }

    fn batch_terms(f: &Forward, x: ArrayView2<'_, f64>) -> (f64, f64) {
        let n = x.nrows() as f64;
        let d = x.ncols() as f64;
        let mse = (&f.recon - &x).mapv(|v| v * v).sum() / (n * d);
        let kl = 0.5
            * (f.mu.mapv(|m| m * m) + f.log_var.mapv(f64::exp) - &f.log_var - 1.0).sum()
            / n;
        (mse, kl)
    }

    /// Batch-mean loss and its gradient for fixed reparameterisation noise.
    fn loss_and_grad(&self, x: ArrayView2<'_, f64>, eps: ArrayView2<'_, f64>, beta: f64) -> (f64, f64, Vec<DenseGrad>, Vec<DenseGrad>) {
        let f = self.forward(x, eps);
        let (mse, kl) = Self::batch_terms(&f, x);
        let n = x.nrows() as f64;
        let d = x.ncols() as f64;

        let g_recon = (&f.recon - &x) * (2.0 / (n * d));
        let (dec_grads, g_z) = nn::stack_backward(&self.decoder, &f.dec, g_recon);

        let g_mu = &g_z + &(&f.mu * (beta / n));
        let mut g_lv = &g_z * &eps * &f.sigma * 0.5 + f.log_var.mapv(|lv| 0.5 * beta * (lv.exp() - 1.0) / n);
        g_lv.zip_mut_with(&f.raw_log_var, |g, &raw| {
            if raw <= -LOG_VAR_LIMIT || raw >= LOG_VAR_LIMIT {
                *g = 0.0;
            }
        });
        let mut g_out = Array2::zeros((x.nrows(), CODE_LEN));
        g_out.slice_mut(s![.., ..LATENT_DIM]).assign(&g_mu);
        g_out.slice_mut(s![.., LATENT_DIM..]).assign(&g_lv);
        let (enc_grads, _) = nn::stack_backward(&self.encoder, &f.enc, g_out);
        (mse, kl, enc_grads, dec_grads)
    }

    /// Mean ELBO loss over `frames` with ε = 0.
    pub fn loss(&self, frames: ArrayView2<'_, f64>, beta: f64) -> Result<f64> {
        self.check_dim(frames.ncols())?;
        let eps = Array2::zeros((frames.nrows(), LATENT_DIM));
        let f = self.forward(frames, eps.view());
        let (mse, kl) = Self::batch_terms(&f, frames);
        Ok(mse + beta * kl)
    }

    /// Mini-batch gradient descent with a linear β warm-up over the first
    /// 10 % of epochs. Returns the mean objective (full β) per epoch.
    pub fn train(&mut self, frames: ArrayView2<'_, f64>, cfg: &TrainConfig) -> Result<Vec<f64>> {
        cfg.validate()?;
        self.check_dim(frames.ncols())?;
        let n = frames.nrows();
        if n == 0 {
            return Err(Error::InsufficientData("no training frames".into()));
        }
        let mut rng = rng::seeded(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let warmup = (cfg.epochs as f64 * 0.1).ceil().max(1.0);
        let mut history = Vec::with_capacity(cfg.epochs);
        for epoch in 0..cfg.epochs {
            let beta = cfg.kl_weight * ((epoch + 1) as f64 / warmup).min(1.0);
            order.shuffle(&mut rng);
            let mut total = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let x = frames.select(Axis(0), batch);
                let eps = Array2::from_shape_fn((batch.len(), LATENT_DIM), |_| StandardNormal.sample(&mut rng));
                let (mse, kl, ge, gd) = self.loss_and_grad(x.view(), eps.view(), beta);
                let loss = mse + cfg.kl_weight * kl;
                if !loss.is_finite() {
                    return Err(Error::Training { epoch, reason: format!("loss became {loss}") });
                }
                total += loss * batch.len() as f64;
                for (layer, g) in self.encoder.iter_mut().zip(&ge) {
                    layer.step(g, cfg.learning_rate);
                }
                for (layer, g) in self.decoder.iter_mut().zip(&gd) {
                    layer.step(g, cfg.learning_rate);
                }
            }
            history.push(total / n as f64);
        }
        Ok(history)
    }

    /// Checks analytic gradients against central differences at ε = 0.
    pub fn gradient_check(&self, frame: ArrayView1<'_, f64>, step: f64, beta: f64) -> Result<GradCheck> {
        self.check_dim(frame.len())?;
        let x = frame.insert_axis(Axis(0)).to_owned();
        let eps = Array2::zeros((1, LATENT_DIM));
        let (_, _, ge, gd) = self.loss_and_grad(x.view(), eps.view(), beta);
        let mut layers: Vec<Dense> = self.encoder.iter().chain(&self.decoder).cloned().collect();
        let analytic: Vec<DenseGrad> = ge.into_iter().chain(gd).collect();
        let n_enc = self.encoder.len();
        Ok(nn::finite_difference_check(&mut layers, &analytic, step, 1e-8, |ls| {
            let m = VaeModel { encoder: ls[..n_enc].to_vec(), decoder: ls[n_enc..].to_vec() };
            m.loss(x.view(), beta).expect("dimension checked")
        }))
    }
}

/// Quantiser over 4-value latent codes.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentQuantizer {
    Scalar(ScalarCodec),
    Vector(VectorQuantizer),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatentMode {
    Scalar,
    Vector,
}

impl LatentQuantizer {
    /// Trains on `(μ1, μ2, σ1, σ2)` rows of the training set.
    pub fn fit(params: ArrayView2<'_, f64>, mode: LatentMode, bits: u8, seed: u64) -> Result<Self> {
        if params.ncols() != CODE_LEN {
            return Err(Error::shape(format!("latent rows must have {CODE_LEN} values")));
        }
        Ok(match mode {
            LatentMode::Scalar => LatentQuantizer::Scalar(ScalarCodec::fit(params, bits)?),
            LatentMode::Vector => LatentQuantizer::Vector(VectorQuantizer::fit(params, bits, seed)?),
        })
    }

    pub fn bits(&self) -> u8 {
        match self {
            LatentQuantizer::Scalar(c) => c.bits,
            LatentQuantizer::Vector(v) => v.bits,
        }
    }

    /// Rate against an uncompressed frame of `uncompressed_bits`.
    pub fn rate(&self, uncompressed_bits: u64) -> RateReport {
        let bits = match self {
            LatentQuantizer::Scalar(c) => CODE_LEN as u64 * c.bits as u64,
            LatentQuantizer::Vector(v) => v.bits as u64,
        };
        RateReport::new(bits, uncompressed_bits)
    }

    pub fn encode_rows(&self, params: ArrayView2<'_, f64>) -> Result<Vec<Vec<u16>>> {
        match self {
            LatentQuantizer::Scalar(c) => c.encode_rows(params),
            LatentQuantizer::Vector(v) => Ok(v.encode_rows(params)?.into_iter().map(|i| vec![i]).collect()),
        }
    }

    pub fn decode_rows(&self, codes: &[Vec<u16>]) -> Result<Array2<f64>> {
        match self {
            LatentQuantizer::Scalar(c) => c.decode_rows(codes),
            LatentQuantizer::Vector(v) => {
                let idx: Vec<u16> = codes.iter().map(|c| c.first().copied().unwrap_or(0)).collect();
                v.decode_rows(&idx)
            }
        }
    }
}

/// Quantises latent codes and reports the per-frame rate.
pub fn latent_quantize(
    codes: &[LatentCode],
    mode: LatentMode,
    bits: u8,
    seed: u64,
    uncompressed_bits: u64,
) -> Result<(LatentQuantizer, Vec<Vec<u16>>, RateReport)> {
    let params = Array2::from_shape_fn((codes.len(), CODE_LEN), |(i, j)| codes[i].params()[j]);
    let q = LatentQuantizer::fit(params.view(), mode, bits, seed)?;
    let idx = q.encode_rows(params.view())?;
    let rate = q.rate(uncompressed_bits);
    Ok((q, idx, rate))
}

pub(crate) fn params_to_z(params: ArrayView2<'_, f64>) -> Array2<f64> {
    params.slice(s![.., ..LATENT_DIM]).to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array1;
    use rand::Rng;

    #[test]
    fn parameter_count_arithmetic() {
        let m = VaeModel::init(56, 64, 32, 1).unwrap();
        let expected = 56 * 64 + 64 + 64 * 32 + 32 + 32 * 4 + 4 + 2 * 32 + 32 + 32 * 64 + 64 + 64 * 56 + 56;
        assert_eq!(m.param_count(), expected);
    }

    #[test]
    fn init_is_seeded() {
        assert_eq!(VaeModel::init(8, 6, 4, 3).unwrap(), VaeModel::init(8, 6, 4, 3).unwrap());
        assert_ne!(VaeModel::init(8, 6, 4, 3).unwrap(), VaeModel::init(8, 6, 4, 4).unwrap());
        assert!(VaeModel::init(0, 6, 4, 3).is_err());
    }

    #[test]
    fn kl_closed_forms() {
        let c = LatentCode { mu: [0.0, 0.0], log_var: [0.0, 0.0] };
        assert_eq!(c.kl(), 0.0);
        let c = LatentCode { mu: [1.0, 0.0], log_var: [0.0, 0.0] };
        assert!((c.kl() - 0.5).abs() < 1e-15);
        assert_eq!(elbo_loss(&[1.0, 2.0], &[1.0, 2.0], &LatentCode { mu: [0.0; 2], log_var: [0.0; 2] }, 1.0), 0.0);
    }

    #[test]
    fn zero_noise_gives_mean() {
        let c = LatentCode { mu: [0.3, -1.2], log_var: [0.7, -2.0] };
        assert_eq!(reparameterize(&c, [0.0, 0.0]), c.mu);
    }

    #[test]
    fn shapes_56_to_4_to_56() {
        let m = VaeModel::init(56, 64, 32, 9).unwrap();
        let frame = Array1::from_shape_fn(56, |i| (i as f64).sin());
        let code = m.encode(frame.view()).unwrap();
        assert_eq!(code.params().len(), 4);
        assert_eq!(m.decode(code.mu).len(), 56);
        assert!(m.encode(Array1::zeros(3).view()).is_err());
    }

    #[test]
    fn params_round_trip() {
        let c = LatentCode { mu: [0.1, 0.2], log_var: [-1.0, 0.5] };
        let back = LatentCode::from_params(c.params());
        assert!((back.log_var[0] + 1.0).abs() < 1e-12);
        assert!((back.log_var[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let mut m = VaeModel::init(5, 4, 3, 1).unwrap();
        let before = m.clone();
        let mut rng = crate::rng::seeded(2);
        let x = Array2::from_shape_fn((20, 5), |_| rng.random_range(-1.0..1.0));
        let cfg = TrainConfig { epochs: 3, batch_size: 8, learning_rate: 0.0, kl_weight: 1.0, seed: 1 };
        m.train(x.view(), &cfg).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn latent_rates() {
        let mut rng = crate::rng::seeded(4);
        let codes: Vec<LatentCode> = (0..64)
            .map(|_| LatentCode { mu: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)], log_var: [rng.random_range(-2.0..0.0), -1.0] })
            .collect();
        let (_, idx, rate) = latent_quantize(&codes, LatentMode::Scalar, 8, 0, 1792).unwrap();
        assert_eq!(rate.bits_per_frame, 32);
        assert_eq!(idx[0].len(), 4);
        let (q, idx, rate) = latent_quantize(&codes, LatentMode::Vector, 3, 0, 1792).unwrap();
        assert_eq!(rate.bits_per_frame, 3);
        assert_eq!(idx[0].len(), 1);
        match q {
            LatentQuantizer::Vector(v) => assert_eq!((v.size(), v.dim()), (8, 4)),
            _ => unreachable!(),
        }
        assert_eq!(RAW_LATENT_BITS, 256);
    }
}
