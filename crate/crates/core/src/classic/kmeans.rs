//! k-means codebook training for vector quantisation.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

const MAX_ITERATIONS: usize = 300;
const TOLERANCE: f64 = 1e-7;

/// A codebook of `2^bits` centroids; a frame is coded as the index of its
/// Euclidean-nearest centroid (lowest index on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorQuantizer {
    pub codebook: Array2<f64>,
    pub bits: u8,
    /// Mean squared distance after every assignment step of training.
    pub distortion_history: Vec<f64>,
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(codebook: &Array2<f64>, x: ArrayView1<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in codebook.outer_iter().enumerate() {
        let d = sq_dist(x, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn assign(codebook: &Array2<f64>, data: ArrayView2<'_, f64>) -> Vec<(usize, f64)> {
    let rows: Vec<ArrayView1<'_, f64>> = data.outer_iter().collect();
    rows.par_iter().map(|x| nearest(codebook, *x)).collect()
}

fn mean_distortion(assignments: &[(usize, f64)]) -> f64 {
    assignments.iter().map(|a| a.1).sum::<f64>() / assignments.len() as f64
}

/// k-means++ seeding: first centre uniform, the rest drawn with probability
/// proportional to squared distance from the nearest chosen centre. Once every
/// distinct point is a centre the remaining slots repeat the first centre.
fn seed_plus_plus(data: ArrayView2<'_, f64>, k: usize, rng: &mut rng::Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut centres = Array2::zeros((k, data.ncols()));
    let first = rng.random_range(0..n);
    centres.row_mut(0).assign(&data.row(first));
    let mut d2: Vec<f64> = data.outer_iter().map(|x| sq_dist(x, data.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > r {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave r just above the final partial sum.
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            first
        };
        centres.row_mut(c).assign(&data.row(pick));
        for (i, x) in data.outer_iter().enumerate() {
            let d = sq_dist(x, data.row(pick));
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centres
}

/// Lloyd iterations from `codebook`. Returns the final codebook and the
/// distortion after each assignment step.
fn lloyd(data: ArrayView2<'_, f64>, mut codebook: Array2<f64>) -> (Array2<f64>, Vec<f64>) {
    let (n, d) = data.dim();
    let k = codebook.nrows();
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..MAX_ITERATIONS {
        let assignments = assign(&codebook, data);
        let dist = mean_distortion(&assignments);
        if let Some(&prev) = history.last() {
            if prev <= 0.0 || (prev - dist) / prev < TOLERANCE {
                history.push(dist);
                converged = true;
                break;
            }
        }
        history.push(dist);
        if dist == 0.0 {
            converged = true;
            break;
        }

        let mut sums = Array2::<f64>::zeros((k, d));
        let mut counts = vec![0usize; k];
        for (x, &(j, _)) in data.outer_iter().zip(&assignments) {
            let mut row = sums.row_mut(j);
            row += &x;
            counts[j] += 1;
        }
        let mut spare: Vec<(usize, f64)> = assignments.iter().enumerate().map(|(i, a)| (i, a.1)).collect();
        // Farthest first; index order breaks ties.
        spare.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut spare = spare.into_iter();
        for j in 0..k {
            if counts[j] > 0 {
                let mean = &sums.row(j) / counts[j] as f64;
                codebook.row_mut(j).assign(&mean);
            } else if let Some((i, dist)) = spare.next() {
                if dist > 0.0 {
                    codebook.row_mut(j).assign(&data.row(i));
                }
            }
        }
    }
    if !converged {
        let assignments = assign(&codebook, data);
        history.push(mean_distortion(&assignments));
    }
    let _ = n;
    (codebook, history)
}

fn check(data: ArrayView2<'_, f64>, bits: u8) -> Result<usize> {
    if !(1..=8).contains(&bits) {
        return Err(Error::config(format!("VQ bits must be in 1..=8, got {bits}")));
    }
    if data.nrows() == 0 {
        return Err(Error::InsufficientData("cannot train a codebook on zero vectors".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::format("training vectors must be finite"));
    }
    Ok(1usize << bits)
}

impl VectorQuantizer {
    /// k-means with `2^bits` centroids, k-means++ seeding from `seed`.
    pub fn fit(data: ArrayView2<'_, f64>, bits: u8, seed: u64) -> Result<Self> {
        let k = check(data, bits)?;
        let mut rng = rng::seeded(seed);
        let init = seed_plus_plus(data, k, &mut rng);
        let (codebook, distortion_history) = lloyd(data, init);
        Ok(VectorQuantizer { codebook, bits, distortion_history })
    }

    /// Trains a `bits + 1` codebook by splitting this one: every centroid is
    /// kept and gains a slightly perturbed twin before Lloyd iterations resume.
    /// The result's distortion on `data` is never above this codebook's.
    pub fn refine(&self, data: ArrayView2<'_, f64>, seed: u64) -> Result<Self> {
        let bits = self.bits + 1;
        let k = check(data, bits)?;
        if data.ncols() != self.dim() {
            return Err(Error::shape("refinement data dimension differs from codebook"));
        }
        let mut rng = rng::seeded(seed);
        let spread = data.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s * 1e-3 } else { 1e-9 });
        let mut init = Array2::zeros((k, self.dim()));
        for (j, c) in self.codebook.outer_iter().enumerate() {
            init.row_mut(2 * j).assign(&c);
            let jitter = Array1::from_shape_fn(self.dim(), |i| if rng.random::<bool>() { spread[i] } else { -spread[i] });
            init.row_mut(2 * j + 1).assign(&(&c + &jitter));
        }
        let (codebook, distortion_history) = lloyd(data, init);
        Ok(VectorQuantizer { codebook, bits, distortion_history })
    }

    pub fn from_codebook(codebook: Array2<f64>, bits: u8) -> Result<Self> {
        if !(1..=8).contains(&bits) || codebook.nrows() != 1 << bits {
            return Err(Error::shape(format!("{} centroids for a {bits}-bit codebook", codebook.nrows())));
        }
        Ok(VectorQuantizer { codebook, bits, distortion_history: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.codebook.ncols()
    }

    pub fn size(&self) -> usize {
        self.codebook.nrows()
    }

    pub fn encode(&self, frame: ArrayView1<'_, f64>) -> Result<u16> {
        if frame.len() != self.dim() {
            return Err(Error::shape(format!("frame has {} values, codebook expects {}", frame.len(), self.dim())));
        }
        Ok(nearest(&self.codebook, frame).0 as u16)
    }

    pub fn encode_rows(&self, frames: ArrayView2<'_, f64>) -> Result<Vec<u16>> {
        if frames.ncols() != self.dim() {
            return Err(Error::shape(format!("frames have {} values, codebook expects {}", frames.ncols(), self.dim())));
        }
        Ok(assign(&self.codebook, frames).into_iter().map(|(j, _)| j as u16).collect())
    }

    pub fn decode(&self, index: u16) -> Result<ArrayView1<'_, f64>> {
        if index as usize >= self.size() {
            return Err(Error::Range { index: index as usize, limit: self.size() });
        }
        Ok(self.codebook.row(index as usize))
    }

    pub fn decode_rows(&self, indices: &[u16]) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((indices.len(), self.dim()));
        for (mut row, &i) in out.outer_iter_mut().zip(indices) {
            row.assign(&self.decode(i)?);
        }
        Ok(out)
    }

    /// Mean squared distance of `data` to its nearest centroids.
    pub fn distortion(&self, data: ArrayView2<'_, f64>) -> f64 {
        mean_distortion(&assign(&self.codebook, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_clusters_1d() {
        let data = array![[0.0], [0.0], [10.0], [10.0]];
        let vq = VectorQuantizer::fit(data.view(), 1, 3).unwrap();
        let mut cb: Vec<f64> = vq.codebook.iter().cloned().collect();
        cb.sort_by(f64::total_cmp);
        assert_eq!(cb, vec![0.0, 10.0]);
        assert_eq!(vq.distortion(data.view()), 0.0);
    }

    #[test]
    fn exact_points_give_zero_distortion() {
        let data = array![[0.0, 1.0], [2.0, 3.0], [5.0, -1.0], [7.0, 7.0]];
        let vq = VectorQuantizer::fit(data.view(), 2, 11).unwrap();
        assert_eq!(vq.distortion(data.view()), 0.0);
        for p in data.outer_iter() {
            assert!(vq.codebook.outer_iter().any(|c| c == p));
        }
    }

    #[test]
    fn fewer_distinct_points_than_codewords() {
        let data = array![[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]];
        let vq = VectorQuantizer::fit(data.view(), 3, 0).unwrap();
        assert_eq!(vq.size(), 8);
        assert_eq!(vq.distortion(data.view()), 0.0);
    }

    #[test]
    fn tie_goes_to_lowest_index() {
        let cb = array![[0.0], [5.0], [-1.0], [9.0], [8.0], [1.0], [20.0], [30.0]];
        let vq = VectorQuantizer::from_codebook(cb, 3).unwrap();
        // equidistant from index 2 (-1) and index 5 (1)
        assert_eq!(vq.encode(array![0.0].view()).unwrap(), 0);
        let cb = array![[10.0], [5.0], [-1.0], [9.0], [8.0], [1.0], [20.0], [30.0]];
        let vq = VectorQuantizer::from_codebook(cb, 3).unwrap();
        assert_eq!(vq.encode(array![0.0].view()).unwrap(), 2);
    }

    #[test]
    fn decode_range_checked() {
        let vq = VectorQuantizer::from_codebook(array![[0.0], [1.0]], 1).unwrap();
        assert!(matches!(vq.decode(2), Err(Error::Range { .. })));
        assert!(vq.encode(array![0.0, 1.0].view()).is_err());
    }
}
