//! Lloyd-Max (MSE-optimal) scalar quantisation.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 200;
const TOLERANCE: f64 = 1e-7;

/// A scalar quantiser with `2^bits` reconstruction levels.
///
/// `thresholds[j]` is the midpoint between `levels[j]` and `levels[j + 1]`; a
/// value equal to a threshold maps to the lower level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarQuantizer {
    pub levels: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub bits: u8,
    /// The training set had fewer distinct values than levels; surplus levels
    /// repeat the largest value.
    pub degenerate: bool,
}

fn check_bits(bits: u8) -> Result<usize> {
    if !(1..=8).contains(&bits) {
        return Err(Error::config(format!("quantiser bits must be in 1..=8, got {bits}")));
    }
    Ok(1usize << bits)
}

fn midpoints(levels: &[f64]) -> Vec<f64> {
    levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Sorted samples with running sums for O(log n) cell statistics.
struct SortedSamples {
    x: Vec<f64>,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl SortedSamples {
    fn new(samples: &[f64]) -> Self {
        let mut x = samples.to_vec();
        x.sort_by(f64::total_cmp);
        let mut s1 = Vec::with_capacity(x.len() + 1);
        let mut s2 = Vec::with_capacity(x.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        s1.push(0.0);
        s2.push(0.0);
        for &v in &x {
            a += v;
            b += v * v;
            s1.push(a);
            s2.push(b);
        }
        SortedSamples { x, s1, s2 }
    }

    /// Cell boundaries (as sample indices) under nearest-level assignment.
    fn boundaries(&self, thresholds: &[f64]) -> Vec<usize> {
        let mut b = Vec::with_capacity(thresholds.len() + 2);
        b.push(0);
        for &t in thresholds {
            b.push(self.x.partition_point(|&v| v <= t));
        }
        b.push(self.x.len());
        b
    }

    fn quantile(&self, p: f64) -> f64 {
        let n = self.x.len();
        let pos = (p * n as f64 - 0.5).clamp(0.0, (n - 1) as f64);
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        let frac = pos - lo as f64;
        self.x[lo] * (1.0 - frac) + self.x[hi] * frac
    }

    /// Lloyd iterations from `levels`; returns the final levels. An empty
    /// cell has its level moved onto the sample with the largest error.
    fn lloyd(&self, mut levels: Vec<f64>) -> Vec<f64> {
        let mut prev_mse = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let b = self.boundaries(&midpoints(&levels));
            let mut mse = 0.0;
            let mut next = levels.clone();
            let mut empty = Vec::new();
            for j in 0..levels.len() {
                let (lo, hi) = (b[j], b[j + 1]);
                if hi == lo {
                    empty.push(j);
                    continue;
                }
                let cnt = (hi - lo) as f64;
                let sum = self.s1[hi] - self.s1[lo];
                let sq = self.s2[hi] - self.s2[lo];
                let l = levels[j];
                mse += sq - 2.0 * l * sum + l * l * cnt;
                next[j] = sum / cnt;
            }
            mse = mse.max(0.0) / self.x.len() as f64;
            if !empty.is_empty() {
                let mut errs: Vec<(usize, f64)> = Vec::with_capacity(self.x.len());
                for j in 0..levels.len() {
                    for i in b[j]..b[j + 1] {
                        errs.push((i, (self.x[i] - levels[j]).abs()));
                    }
                }
                errs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                let mut taken: Vec<f64> = Vec::new();
                let mut far = errs.into_iter().map(|(i, _)| self.x[i]);
                for j in empty {
                    if let Some(v) = far.by_ref().find(|v| !taken.contains(v) && !next.contains(v)) {
                        next[j] = v;
                        taken.push(v);
                    }
                }
            } else if mse <= 0.0 || (prev_mse - mse) / prev_mse < TOLERANCE {
                next.sort_by(f64::total_cmp);
                levels = next;
                break;
            }
            next.sort_by(f64::total_cmp);
            levels = next;
            prev_mse = mse;
        }
        levels
    }
}

impl ScalarQuantizer {
    pub fn from_levels(mut levels: Vec<f64>, bits: u8) -> Result<Self> {
        let k = check_bits(bits)?;
        if levels.len() != k {
            return Err(Error::shape(format!("{} levels for a {bits}-bit quantiser", levels.len())));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::format("quantiser levels must be finite"));
        }
        levels.sort_by(f64::total_cmp);
        let degenerate = levels.windows(2).any(|w| w[0] == w[1]);
        Ok(ScalarQuantizer { thresholds: midpoints(&levels), levels, bits, degenerate })
    }

    /// Trains an MSE-optimal quantiser on `samples`.
    ///
    /// Lloyd iterations run from three starts (quantile midpoints, uniform
    /// levels over `[min, max]`, and the split `bits - 1` solution) and the
    /// lowest-MSE result is kept, so the result is never worse than the
    /// uniform quantiser and never worse than the quantiser with one bit less.
    pub fn fit(samples: &[f64], bits: u8) -> Result<Self> {
        check_bits(bits)?;
        if samples.is_empty() {
            return Err(Error::InsufficientData("cannot fit a quantiser on zero samples".into()));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::format("samples must be finite"));
        }
        let sorted = SortedSamples::new(samples);
        let mut distinct: Vec<f64> = sorted.x.clone();
        distinct.dedup();
        let k = 1usize << bits;
        if distinct.len() <= k {
            let mut levels = distinct.clone();
            let top = *levels.last().expect("non-empty");
            levels.resize(k, top);
            let mut q = ScalarQuantizer::from_levels(levels, bits)?;
            q.degenerate = distinct.len() < k;
            return Ok(q);
        }

        let mut best: Option<ScalarQuantizer> = None;
        for b in 1..=bits {
            let kb = 1usize << b;
            let mut candidates = vec![
                (0..kb).map(|j| sorted.quantile((j as f64 + 0.5) / kb as f64)).collect::<Vec<_>>(),
                uniform_levels(sorted.x[0], *sorted.x.last().unwrap(), kb),
            ];
            if let Some(prev) = &best {
                candidates.push(split_levels(prev, &sorted.x));
            }
            let mut winner: Option<(f64, Vec<f64>)> = None;
            for init in candidates {
                let init_mse = mse_of(&init, &sorted.x);
                let trained = sorted.lloyd(init.clone());
                let trained_mse = mse_of(&trained, &sorted.x);
                let init_ok = init.windows(2).all(|w| w[0] < w[1]);
                let (m, l) = if init_ok && init_mse < trained_mse { (init_mse, init) } else { (trained_mse, trained) };
                if winner.as_ref().is_none_or(|(wm, _)| m < *wm) {
                    winner = Some((m, l));
                }
            }
            let (_, levels) = winner.expect("at least one candidate");
            let mut q = ScalarQuantizer::from_levels(levels, b)?;
            q.degenerate = false;
            best = Some(q);
        }
        Ok(best.expect("bits >= 1"))
    }

    /// Uniform mid-rise quantiser spanning `[min, max]` of `samples`.
    pub fn uniform(samples: &[f64], bits: u8) -> Result<Self> {
        let k = check_bits(bits)?;
        if samples.is_empty() {
            return Err(Error::InsufficientData("cannot fit a quantiser on zero samples".into()));
        }
        let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ScalarQuantizer::from_levels(uniform_levels(lo, hi, k), bits)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Index of the nearest level; exact ties resolve to the lower index.
    pub fn encode(&self, value: f64) -> u16 {
        self.thresholds.partition_point(|&t| t < value) as u16
    }

    pub fn decode(&self, index: u16) -> Result<f64> {
        self.levels
            .get(index as usize)
            .copied()
            .ok_or(Error::Range { index: index as usize, limit: self.levels.len() })
    }

    pub fn quantize(&self, value: f64) -> f64 {
        self.levels[self.encode(value) as usize]
    }

    pub fn mse(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&v| (v - self.quantize(v)).powi(2)).sum::<f64>() / samples.len().max(1) as f64
    }
}

fn uniform_levels(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    let step = (hi - lo) / k as f64;
    (0..k).map(|j| lo + (j as f64 + 0.5) * step).collect()
}

fn mse_of(levels: &[f64], sorted: &[f64]) -> f64 {
    let t = midpoints(levels);
    sorted
        .iter()
        .map(|&v| {
            let l = levels[t.partition_point(|&th| th < v)];
            (v - l) * (v - l)
        })
        .sum::<f64>()
        / sorted.len() as f64
}

/// Doubles a codebook: each level keeps its place and gains a neighbour
/// halfway to the upper edge of its cell. A superset of levels can only lower
/// the nearest-level MSE.
fn split_levels(prev: &ScalarQuantizer, sorted: &[f64]) -> Vec<f64> {
    let max = *sorted.last().expect("non-empty");
    let min = sorted[0];
    let k = prev.levels.len();
    let mut out = Vec::with_capacity(2 * k);
    for (j, &l) in prev.levels.iter().enumerate() {
        let upper = if j + 1 < k { prev.thresholds[j] } else { max };
        let lower = if j > 0 { prev.thresholds[j - 1] } else { min };
        let extra = if upper > l { 0.5 * (l + upper) } else { 0.5 * (l + lower) };
        out.push(l);
        out.push(extra);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Independent per-dimension scalar quantisers sharing one bit depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCodec {
    pub quantizers: Vec<ScalarQuantizer>,
    pub bits: u8,
}

impl ScalarCodec {
    /// Fits one Lloyd-Max quantiser per column of `train`.
    pub fn fit(train: ArrayView2<'_, f64>, bits: u8) -> Result<Self> {
        check_bits(bits)?;
        let columns: Vec<Vec<f64>> = train.axis_iter(Axis(1)).map(|c| c.to_vec()).collect();
        let quantizers = columns
            .par_iter()
            .map(|c| ScalarQuantizer::fit(c, bits))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScalarCodec { quantizers, bits })
    }

    pub fn dim(&self) -> usize {
        self.quantizers.len()
    }

    pub fn encode(&self, frame: &[f64]) -> Result<Vec<u16>> {
        if frame.len() != self.dim() {
            return Err(Error::shape(format!("frame has {} values, codec expects {}", frame.len(), self.dim())));
        }
        Ok(frame.iter().zip(&self.quantizers).map(|(&v, q)| q.encode(v)).collect())
    }

    pub fn decode(&self, indices: &[u16]) -> Result<Vec<f64>> {
        if indices.len() != self.dim() {
            return Err(Error::shape(format!("{} indices, codec expects {}", indices.len(), self.dim())));
        }
        indices.iter().zip(&self.quantizers).map(|(&i, q)| q.decode(i)).collect()
    }

    pub fn encode_rows(&self, frames: ArrayView2<'_, f64>) -> Result<Vec<Vec<u16>>> {
        frames.outer_iter().map(|r| self.encode(&r.to_vec())).collect()
    }

    pub fn decode_rows(&self, codes: &[Vec<u16>]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((codes.len(), self.dim()));
        for (mut row, c) in out.outer_iter_mut().zip(codes) {
            for (dst, v) in row.iter_mut().zip(self.decode(c)?) {
                *dst = v;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn constant_samples_collapse() {
        for bits in 1..=4 {
            let q = ScalarQuantizer::fit(&[2.5, 2.5, 2.5], bits).unwrap();
            assert!(q.degenerate);
            assert_eq!(q.mse(&[2.5, 2.5, 2.5]), 0.0);
            assert_eq!(q.quantize(2.5), 2.5);
        }
    }

    #[test]
    fn threshold_ties_go_low() {
        let q = ScalarQuantizer::from_levels(vec![0.0, 1.0], 1).unwrap();
        assert_eq!(q.thresholds, vec![0.5]);
        assert_eq!(q.encode(0.5), 0);
        assert_eq!(q.encode(0.5000001), 1);
    }

    #[test]
    fn decode_out_of_range() {
        let q = ScalarQuantizer::from_levels(vec![0.0, 1.0], 1).unwrap();
        assert!(matches!(q.decode(2), Err(Error::Range { index: 2, limit: 2 })));
    }

    #[test]
    fn uniform_one_bit_optimum() {
        // Oracle: brute-force grid search over the single threshold.
        let n = 20_000;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let mut best = (f64::INFINITY, 0.0);
        for g in 1..1000 {
            let t = g as f64 / 1000.0;
            let (lo, hi): (Vec<f64>, Vec<f64>) = samples.iter().partition(|&&v| v <= t);
            let ml = lo.iter().sum::<f64>() / lo.len() as f64;
            let mh = hi.iter().sum::<f64>() / hi.len() as f64;
            let mse = lo.iter().map(|v| (v - ml).powi(2)).sum::<f64>() + hi.iter().map(|v| (v - mh).powi(2)).sum::<f64>();
            if mse < best.0 {
                best = (mse, t);
            }
        }
        assert!((best.1 - 0.5).abs() < 2e-3);
        let q = ScalarQuantizer::fit(&samples, 1).unwrap();
        assert!((q.levels[0] - 0.25).abs() < 1e-3, "{:?}", q.levels);
        assert!((q.levels[1] - 0.75).abs() < 1e-3);
        assert!((q.thresholds[0] - best.1).abs() < 2e-3);
    }

    #[test]
    fn levels_and_thresholds_consistent() {
        let mut rng = crate::rng::seeded(5);
        let samples: Vec<f64> = (0..5000).map(|_| StandardNormal.sample(&mut rng)).collect();
        for bits in 1..=8 {
            let q = ScalarQuantizer::fit(&samples, bits).unwrap();
            assert_eq!(q.levels.len(), 1 << bits);
            assert!(q.levels.windows(2).all(|w| w[0] < w[1]));
            for (j, t) in q.thresholds.iter().enumerate() {
                assert!((t - 0.5 * (q.levels[j] + q.levels[j + 1])).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn round_trip_error_bounded_by_half_gap() {
        let mut rng = crate::rng::seeded(6);
        let samples: Vec<f64> = (0..4000).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q = ScalarQuantizer::fit(&samples, 3).unwrap();
        let max_half_gap = q.levels.windows(2).map(|w| 0.5 * (w[1] - w[0])).fold(0.0, f64::max);
        let lo = q.levels[0];
        let hi = *q.levels.last().unwrap();
        for &v in &samples {
            let err = (v - q.quantize(v)).abs();
            if (lo..=hi).contains(&v) {
                assert!(err <= max_half_gap + 1e-12);
            }
            // re-encoding the decoded value is stable
            assert_eq!(q.encode(q.quantize(v)), q.encode(v));
        }
    }

    #[test]
    fn codec_rate_shape() {
        let train = Array2::from_shape_fn((100, 56), |(i, j)| ((i * 7 + j * 3) % 17) as f64);
        let codec = ScalarCodec::fit(train.view(), 8).unwrap();
        assert_eq!(codec.dim(), 56);
        let idx = codec.encode(&train.row(3).to_vec()).unwrap();
        assert_eq!(idx.len(), 56);
        assert!(codec.encode(&[1.0]).is_err());
    }

    #[test]
    fn bits_out_of_range() {
        assert!(ScalarQuantizer::fit(&[1.0, 2.0], 0).is_err());
        assert!(ScalarQuantizer::fit(&[1.0, 2.0], 9).is_err());
        assert!(ScalarQuantizer::fit(&[], 2).is_err());
    }
}
