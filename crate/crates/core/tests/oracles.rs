//! Library results checked against independent reference computations.

mod common;

use common::{a_star_oracle, brute_nearest, brute_threshold, eigen_oracle, optimal_scalar_mse};
use csi_lossy::classic::{PcaModel, ScalarQuantizer, VectorQuantizer};
use csi_lossy::eval::{f1_score, relative_f1_loss, ConfusionMatrix, F1Mode};
use csi_lossy::rng::seeded;
use csi_lossy::sensing::{compute_a_star, fit_threshold, MlpClassifier};
use csi_lossy::vae::VaeModel;
use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = seeded(seed);
    let scales: Vec<f64> = (0..cols).map(|j| 1.0 + j as f64).collect();
    Array2::from_shape_fn((rows, cols), |(_, j)| Normal::new(0.0, scales[j]).unwrap().sample(&mut rng))
}

#[test]
fn pca_matches_eigendecomposition() {
    for seed in 0..5 {
        let data = gaussian_matrix(200, 6, seed);
        let pca = PcaModel::fit(data.view(), 6).unwrap();
        let (values, vectors) = eigen_oracle(data.view());
        #[allow(clippy::needless_range_loop)]
        for k in 0..6 {
            assert!((pca.explained_variance[k] - values[k]).abs() < 1e-8);
            let dot: f64 = pca.components.row(k).dot(&vectors.row(k));
            assert!((dot.abs() - 1.0).abs() < 1e-8, "component {k}: |dot| = {}", dot.abs());
        }
    }
}

#[test]
fn lloyd_max_reaches_the_optimum_on_unimodal_data() {
    let mut rng = seeded(3);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let samples: Vec<f64> = (0..2000).map(|_| normal.sample(&mut rng)).collect();
    for bits in 1..=3u8 {
        let mse = ScalarQuantizer::fit(&samples, bits).unwrap().mse(&samples);
        let best = optimal_scalar_mse(&samples, 1 << bits);
        assert!(mse >= best - 1e-12);
        assert!(mse <= best * 1.01, "{bits} bits: {mse} vs optimum {best}");
    }
}

#[test]
fn lloyd_max_separated_clusters() {
    let samples: Vec<f64> = [-9.0, -8.8, -1.1, -0.9, 0.9, 1.1, 8.8, 9.0].to_vec();
    let q = ScalarQuantizer::fit(&samples, 2).unwrap();
    assert!((q.mse(&samples) - optimal_scalar_mse(&samples, 4)).abs() < 1e-12);
    for (l, want) in q.levels.iter().zip([-8.9, -1.0, 1.0, 8.9]) {
        assert!((l - want).abs() < 1e-12);
    }
}

#[test]
fn vq_encode_is_nearest_centroid() {
    let data = gaussian_matrix(300, 4, 9);
    let vq = VectorQuantizer::fit(data.view(), 4, 1).unwrap();
    let queries = gaussian_matrix(500, 4, 10);
    let codes = vq.encode_rows(queries.view()).unwrap();
    for (q, &c) in queries.outer_iter().zip(&codes) {
        assert_eq!(c as usize, brute_nearest(vq.codebook.view(), q));
    }
}

#[test]
fn threshold_matches_exhaustive_search() {
    let mut rng = seeded(5);
    for _ in 0..50 {
        let n = rng.random_range(2..60);
        let mut samples: Vec<(f64, bool)> =
            (0..n).map(|_| ((rng.random_range(0..20) as f64) * 0.5, rng.random::<bool>())).collect();
        samples[0].1 = true;
        samples[1].1 = false;
        let clf = fit_threshold(&samples).unwrap();
        let (t, f1) = brute_threshold(&samples);
        if clf.degenerate {
            assert!(t.is_nan());
            continue;
        }
        assert_eq!(clf.threshold, t);
        assert!((clf.training_f1 - f1).abs() < 1e-12);
    }
}

#[test]
fn a_star_matches_two_pass_formula() {
    let w = gaussian_matrix(64, 56, 12).mapv(|v| v + 10.0);
    assert!((compute_a_star(w.view()).unwrap().a_star - a_star_oracle(w.view())).abs() < 1e-12);
}

#[test]
fn f1_hand_computed() {
    // tp 2, fp 1, fn 1
    let m = ConfusionMatrix::from_predictions(2, &[1, 1, 0, 0, 1], &[1, 0, 0, 1, 1]).unwrap();
    assert!((f1_score(&m, F1Mode::Binary { positive: 1 }).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    // class 0: tp 1 fp 0 fn 1 → 2/3; class 1: tp 1 fp 1 fn 0 → 2/3; class 2: tp 1 → 1
    let m = ConfusionMatrix::from_predictions(3, &[0, 0, 1, 2], &[0, 1, 1, 2]).unwrap();
    assert!((f1_score(&m, F1Mode::Macro).unwrap() - (2.0 / 3.0 + 2.0 / 3.0 + 1.0) / 3.0).abs() < 1e-15);
    assert!((relative_f1_loss(0.8, 0.6) - 25.0).abs() < 1e-12);
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let x = gaussian_matrix(6, 5, 21);
    let labels = [0u16, 1, 2, 0, 1, 2];
    let mlp = MlpClassifier::init(5, &[7], 3, 4).unwrap();
    let check = mlp.gradient_check(x.view(), &labels, 1e-5).unwrap();
    assert!(check.max_relative_error < 1e-4, "{check:?}");
    let vae = VaeModel::init(5, 8, 6, 2).unwrap();
    let check = vae.gradient_check(x.row(0), 1e-5, 1.0).unwrap();
    assert!(check.max_relative_error < 1e-4, "{check:?}");
    assert!(check.checked > 0);
}
