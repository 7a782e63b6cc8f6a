//! Deterministic synthetic CSI for the presence and activity tasks.
//!
//! Every segment of a recording draws from its own ChaCha8 stream seeded with
//! `derive_seed(seed, segment_index)`, so a dataset is a pure function of its
//! [`SynthConfig`]. Amplitudes are rounded to `f32` so that both interchange
//! formats store them exactly.

use std::f64::consts::TAU;

use ndarray::{Array1, Array2};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{default_retain_mask, synth_timestamps, CsiDataset, DatasetMeta};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded, Rng};

const MIN_AMPLITUDE: f64 = 1e-3;
/// Mean amplitude level of the base channel profile.
const BASE_LEVEL: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PresenceParams {
    pub empty_noise_std: f64,
    pub presence_noise_std: f64,
    pub fading_amplitude: f64,
    pub fading_period_s: f64,
    /// Length of each alternating empty / presence segment.
    pub segment_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityClass {
    pub name: String,
    /// Standard deviation scale of the class's motion component.
    pub variance_scale: f64,
    pub modulation_freq_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    /// Subcarriers generated per frame (including guards).
    pub subcarriers: usize,
    pub frame_rate: f64,
    /// Total length for presence data; length per class for activity data.
    pub duration_s: f64,
    pub channel_width_mhz: u32,
    pub presence: PresenceParams,
    pub activity: Vec<ActivityClass>,
    /// Per-subcarrier noise present in every activity frame.
    pub activity_noise_std: f64,
}

impl SynthConfig {
    /// 64 subcarriers (56 after guard removal) at 64 fps for 10 minutes.
    pub fn presence(seed: u64) -> Self {
        SynthConfig {
            seed,
            subcarriers: 64,
            frame_rate: 64.0,
            duration_s: 600.0,
            channel_width_mhz: 20,
            presence: PresenceParams {
                empty_noise_std: 0.1,
                presence_noise_std: 0.3,
                fading_amplitude: 1.0,
                fading_period_s: 2.0,
                segment_seconds: 30.0,
            },
            activity: Vec::new(),
            activity_noise_std: 0.0,
        }
    }

    /// Five activities, 128 subcarriers at 150 fps, 80 s each.
    pub fn activity(seed: u64) -> Self {
        let class = |name: &str, variance_scale, modulation_freq_hz| ActivityClass {
            name: name.to_string(),
            variance_scale,
            modulation_freq_hz,
        };
        SynthConfig {
            seed,
            subcarriers: 128,
            frame_rate: 150.0,
            duration_s: 80.0,
            channel_width_mhz: 40,
            presence: SynthConfig::presence(seed).presence,
            activity: vec![
                class("walk", 1.5, 1.0),
                class("run", 3.0, 2.5),
                class("jump", 2.2, 1.5),
                class("sit", 0.6, 0.3),
                class("empty", 0.05, 0.1),
            ],
            activity_noise_std: 0.5,
        }
    }

    /// Checks the documented invariants: positive noise levels, presence
    /// noisier than an empty room, positive rates and durations.
    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        let p = &self.presence;
        if !(p.empty_noise_std > 0.0 && p.presence_noise_std > p.empty_noise_std) {
            return Err(Error::config("need 0 < empty_noise_std < presence_noise_std"));
        }
        if !self.activity.is_empty()
            && (self.activity.iter().any(|c| !(c.variance_scale > 0.0)) || !(self.activity_noise_std > 0.0))
        {
            return Err(Error::config("activity variance scales and noise must be positive"));
        }
        Ok(())
    }

    fn check_structure(&self) -> Result<()> {
        if self.subcarriers == 0 || !(self.frame_rate > 0.0) || !(self.duration_s > 0.0) {
            return Err(Error::config("subcarriers, frame rate and duration must be positive"));
        }
        let p = &self.presence;
        let stds = [p.empty_noise_std, p.presence_noise_std, p.fading_amplitude, self.activity_noise_std];
        if stds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || !(p.fading_period_s > 0.0) || !(p.segment_seconds > 0.0) {
            return Err(Error::config("noise levels must be non-negative, periods positive"));
        }
        Ok(())
    }
}

fn gauss(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Smooth positive per-subcarrier profile: a few low-order harmonics around
/// a constant level.
fn base_profile(w: usize, rng: &mut Rng) -> Array1<f64> {
    let terms: Vec<(f64, f64)> = (0..3).map(|_| (rng.random_range(0.5..1.5), rng.random_range(0.0..TAU))).collect();
    Array1::from_shape_fn(w, |i| {
        let x = i as f64 / w as f64;
        BASE_LEVEL + terms.iter().enumerate().map(|(k, (a, p))| a * (TAU * (k + 1) as f64 * x + p).sin()).sum::<f64>()
    })
}

fn store(v: f64) -> f64 {
    v.max(MIN_AMPLITUDE) as f32 as f64
}

/// Alternating empty (label 0) and presence (label 1) segments.
///
/// Empty frames are the base profile plus small white noise. Presence frames
/// add larger noise and a sinusoidal fading term whose phase differs per
/// subcarrier. Guard subcarriers carry a faint noise-only signal.
pub fn gen_presence(config: &SynthConfig) -> Result<CsiDataset> {
    config.check_structure()?;
    let w = config.subcarriers;
    let p = &config.presence;
    let n = (config.duration_s * config.frame_rate).round() as usize;
    let seg_len = ((p.segment_seconds * config.frame_rate).round() as usize).max(1);
    let mut rng = seeded(derive_seed(config.seed, u64::MAX));
    let base = base_profile(w, &mut rng);
    let phase: Vec<f64> = (0..w).map(|_| rng.random_range(0.0..TAU)).collect();
    let guards: Vec<bool> = default_retain_mask(w).iter().map(|&keep| !keep).collect();

    let mut amps = Array2::zeros((n, w));
    let mut labels = vec![0u16; n];
    for (seg, start) in (0..n).step_by(seg_len).enumerate() {
        let mut rng = seeded(derive_seed(config.seed, seg as u64));
        let present = seg % 2 == 1;
        for t in start..(start + seg_len).min(n) {
            labels[t] = present as u16;
            let time = t as f64 / config.frame_rate;
            let omega = TAU * time / p.fading_period_s;
            for i in 0..w {
                let e = gauss(&mut rng);
                let v = if guards[i] {
                    0.05 + 0.1 * p.empty_noise_std * e
                } else if present {
                    base[i] + p.fading_amplitude * (omega + phase[i]).sin() + p.presence_noise_std * e
                } else {
                    base[i] + p.empty_noise_std * e
                };
                amps[[t, i]] = store(v);
            }
        }
    }
    let mut meta = DatasetMeta::new(w, config.frame_rate, config.channel_width_mhz);
    meta.guard_mask = guards;
    let mut ds = CsiDataset::from_amplitudes(amps, labels, meta)?;
    ds.timestamps = synth_timestamps(n, config.frame_rate);
    ds.class_names = vec!["empty".into(), "presence".into()];
    Ok(ds)
}

/// The first `classes` activities of `config`, each recorded contiguously for
/// `duration_s`.
///
/// Every frame is the base profile plus white noise. Each class adds a motion
/// term along its own subcarrier pattern (the patterns are mutually
/// orthogonal): `variance_scale · u_c · (sin(2π f_c t + ψ) + ½ n(t))`.
pub fn gen_activity(config: &SynthConfig, classes: usize) -> Result<CsiDataset> {
    config.check_structure()?;
    if classes == 0 || classes > config.activity.len() {
        return Err(Error::config(format!("{classes} classes requested, {} configured", config.activity.len())));
    }
    let d = config.subcarriers;
    let per_class = (config.duration_s * config.frame_rate).round() as usize;
    let n = per_class * classes;
    let mut rng = seeded(derive_seed(config.seed, u64::MAX));
    let base = base_profile(d, &mut rng);
    let patterns = orthogonal_patterns(d, classes, &mut rng);

    let mut amps = Array2::zeros((n, d));
    let mut labels = vec![0u16; n];
    for (c, class) in config.activity.iter().take(classes).enumerate() {
        let mut rng = seeded(derive_seed(config.seed, c as u64));
        let psi = rng.random_range(0.0..TAU);
        let u = patterns.row(c);
        for k in 0..per_class {
            let t = c * per_class + k;
            labels[t] = c as u16;
            let time = k as f64 / config.frame_rate;
            let m = class.variance_scale * ((TAU * class.modulation_freq_hz * time + psi).sin() + 0.5 * gauss(&mut rng));
            for i in 0..d {
                let v = base[i] + config.activity_noise_std * gauss(&mut rng) + m * u[i];
                amps[[t, i]] = store(v);
            }
        }
    }
    let meta = DatasetMeta::new(d, config.frame_rate, config.channel_width_mhz);
    let mut ds = CsiDataset::from_amplitudes(amps, labels, meta)?;
    ds.timestamps = synth_timestamps(n, config.frame_rate);
    ds.class_names = config.activity.iter().take(classes).map(|c| c.name.clone()).collect();
    Ok(ds)
}

/// `k` mutually orthogonal random patterns of length `d`, each scaled so its
/// mean squared entry is 1 (Gram–Schmidt on Gaussian vectors).
fn orthogonal_patterns(d: usize, k: usize, rng: &mut Rng) -> Array2<f64> {
    let mut out = Array2::<f64>::zeros((k, d));
    for c in 0..k {
        let mut v = Array1::from_shape_fn(d, |_| gauss(rng));
        for prev in 0..c {
            let p = out.row(prev).to_owned() / (d as f64).sqrt();
            let dot = v.dot(&p);
            v.scaled_add(-dot, &p);
        }
        let norm = v.dot(&v).sqrt();
        let scaled = if norm > 0.0 { v * ((d as f64).sqrt() / norm) } else { v };
        out.row_mut(c).assign(&scaled);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_configs_validate() {
        SynthConfig::presence(1).validate().unwrap();
        SynthConfig::activity(1).validate().unwrap();
        let mut bad = SynthConfig::presence(1);
        bad.presence.presence_noise_std = 0.05;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn presence_shape_and_labels() {
        let cfg = SynthConfig { duration_s: 120.0, ..SynthConfig::presence(3) };
        let ds = gen_presence(&cfg).unwrap();
        assert_eq!(ds.len(), 120 * 64);
        assert_eq!(ds.width(), 64);
        assert_eq!(ds.labels[0], 0);
        assert_eq!(ds.labels[30 * 64], 1);
        assert_eq!(ds.meta.guard_mask.iter().filter(|g| **g).count(), 8);
        assert!(ds.amplitudes().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn patterns_are_orthogonal() {
        let mut rng = seeded(0);
        let p = orthogonal_patterns(32, 5, &mut rng);
        for a in 0..5 {
            for b in 0..5 {
                let dot = p.row(a).dot(&p.row(b)) / 32.0;
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_activity_class() {
        let cfg = SynthConfig { duration_s: 4.0, ..SynthConfig::activity(2) };
        let ds = gen_activity(&cfg, 1).unwrap();
        assert!(ds.labels.iter().all(|&l| l == 0));
        assert_eq!(ds.class_names, vec!["walk".to_string()]);
        assert!(gen_activity(&cfg, 6).is_err());
    }
}
