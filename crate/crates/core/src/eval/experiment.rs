//! One grid cell end to end: split, normalise, compress, classify, score.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use ndarray::{Array2, ArrayView2};

use crate::dataset::{
    filter_subcarriers, informative_mask, split_activity, split_presence, ActivitySplit, CsiDataset, Normalizer,
    Split, Window, WindowSpec,
};
use crate::error::{Error, Result};
use crate::eval::metrics::{ConfusionMatrix, F1Mode};
use crate::eval::relative_f1_loss;
use crate::rng;
use crate::scheme::{FittedScheme, RateReport, SchemeConfig, VaeSettings, Variant};
use crate::sensing::{compute_a_star, fit_threshold, MlpClassifier, MlpConfig, ThresholdClassifier};
use crate::vae::VaeModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Presence,
    Activity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassifierKind {
    Threshold,
    Mlp,
}

/// Which data the classifier is trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrainingMode {
    /// Train once on uncompressed training windows, test on compressed ones.
    Uncompressed,
    /// Retrain per scheme on compressed training windows.
    Compressed,
}

macro_rules! named_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(Error::config(format!("unknown {} '{s}'", stringify!($ty)))),
                }
            }
        }
    };
}

named_enum!(Task { Presence => "presence", Activity => "activity" });
named_enum!(ClassifierKind { Threshold => "threshold", Mlp => "mlp" });
named_enum!(TrainingMode { Uncompressed => "uncompressed", Compressed => "compressed" });

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub classifier: ClassifierKind,
    pub mode: TrainingMode,
    pub seed: u64,
    pub window: WindowSpec,
    /// Presence split: group length and the share of each group used for training.
    pub group_seconds: f64,
    pub train_fraction: f64,
    pub activity_split: ActivitySplit,
    /// Subcarrier retain mask; `None` uses [`informative_mask`].
    pub retain_mask: Option<Vec<bool>>,
    pub mlp: MlpConfig,
    pub vae: VaeSettings,
    /// The MLP trains on every `k`-th training window.
    pub train_window_step: usize,
    /// Summarise each window by per-dimension mean and std instead of
    /// flattening it.
    pub summarize: bool,
}

impl ExperimentConfig {
    pub fn presence(classifier: ClassifierKind, seed: u64) -> Self {
        ExperimentConfig {
            task: Task::Presence,
            classifier,
            mode: TrainingMode::Compressed,
            seed,
            window: WindowSpec::PRESENCE,
            group_seconds: 3.0,
            train_fraction: 2.0 / 3.0,
            activity_split: ActivitySplit::default(),
            retain_mask: None,
            mlp: MlpConfig::presence(),
            vae: VaeSettings::presence(),
            train_window_step: 1,
            summarize: false,
        }
    }

    pub fn activity(seed: u64) -> Self {
        ExperimentConfig {
            task: Task::Activity,
            classifier: ClassifierKind::Mlp,
            window: WindowSpec::ACTIVITY,
            mlp: MlpConfig::activity(),
            vae: VaeSettings::activity(),
            train_window_step: 10,
            summarize: true,
            ..ExperimentConfig::presence(ClassifierKind::Mlp, seed)
        }
    }

    pub fn for_task(task: Task, classifier: ClassifierKind, seed: u64) -> Self {
        match task {
            Task::Presence => ExperimentConfig::presence(classifier, seed),
            Task::Activity => ExperimentConfig { classifier, ..ExperimentConfig::activity(seed) },
        }
    }

    /// Rejects combinations the pipeline cannot run.
    pub fn check_scheme(&self, scheme: &SchemeConfig) -> Result<()> {
        scheme.validate()?;
        if self.classifier == ClassifierKind::Threshold {
            if self.task != Task::Presence {
                return Err(Error::config("the threshold classifier only supports presence detection"));
            }
            if scheme.variant.uses_vae() {
                return Err(Error::config("VAE latents cannot feed the A* threshold classifier"));
            }
        }
        Ok(())
    }
}

/// Score of one scheme on the test windows.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub scheme: SchemeConfig,
    pub rate: RateReport,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
}

/// A point of the rate / F1-loss curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub scheme: SchemeConfig,
    pub rate: RateReport,
    pub f1: f64,
    pub f1_loss_percent: f64,
}

impl TradeoffPoint {
    pub fn bits_per_frame(&self) -> u64 {
        self.rate.bits_per_frame
    }
}

/// A trained sensing back-end.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedClassifier {
    Threshold(ThresholdClassifier),
    Mlp(MlpClassifier),
}

impl TrainedClassifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedClassifier::Threshold(_) => ClassifierKind::Threshold,
            TrainedClassifier::Mlp(_) => ClassifierKind::Mlp,
        }
    }
}

type Cached<T> = OnceLock<Result<T>>;

fn cached<T: Clone>(cell: &Cached<T>, init: impl FnOnce() -> Result<T>) -> Result<T> {
    match cell.get_or_init(init) {
        Ok(v) => Ok(v.clone()),
        Err(e) => Err(e.duplicate()),
    }
}

/// A dataset prepared for repeated evaluation: split, normaliser and
/// normalised frames are computed once and shared by every scheme.
#[derive(Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub split: Split,
    pub normalizer: Normalizer,
    /// Retained-subcarrier amplitudes.
    amplitudes: Array2<f64>,
    normalized: Array2<f64>,
    train_frames: Array2<f64>,
    classes: usize,
    vae: Cached<VaeModel>,
    reference: Cached<TrainedClassifier>,
    latent_reference: Cached<TrainedClassifier>,
}

fn window_rows(windows: &[Window], step: usize) -> Vec<&Window> {
    windows.iter().step_by(step.max(1)).collect()
}

impl Experiment {
    pub fn prepare(dataset: &CsiDataset, config: ExperimentConfig) -> Result<Self> {
        let mask = config.retain_mask.clone().unwrap_or_else(|| informative_mask(dataset));
        let filtered = filter_subcarriers(dataset, &mask)?;
        let split = match config.task {
            Task::Presence => split_presence(&filtered, config.group_seconds, config.window, config.train_fraction)?,
            Task::Activity => split_activity(&filtered, &config.activity_split, config.window)?,
        };
        if split.train.is_empty() || split.test.is_empty() {
            return Err(Error::EmptyResult(format!(
                "split produced {} training and {} test windows",
                split.train.len(),
                split.test.len()
            )));
        }
        if split.skipped > 0 {
            log::warn!("{} groups too short for one window were skipped", split.skipped);
        }
        let amplitudes = filtered.amplitudes();
        let train_frames = amplitudes.select(ndarray::Axis(0), &split.train_frames());
        let normalizer = Normalizer::fit(train_frames.view())?;
        let normalized = normalizer.apply(amplitudes.view())?;
        let train_frames = normalizer.apply(train_frames.view())?;
        let classes = match config.task {
            Task::Presence => 2.max(filtered.class_count()),
            Task::Activity => filtered.class_count(),
        };
        Ok(Experiment {
            config,
            split,
            normalizer,
            amplitudes,
            normalized,
            train_frames,
            classes,
            vae: OnceLock::new(),
            reference: OnceLock::new(),
            latent_reference: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.normalized.ncols()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    fn f1_mode(&self) -> F1Mode {
        match self.config.task {
            Task::Presence => F1Mode::Binary { positive: 1 },
            Task::Activity => F1Mode::Macro,
        }
    }

    fn cell_seed(&self, scheme: &SchemeConfig) -> u64 {
        let id = (scheme.variant as u64) << 32 | (scheme.n_pca.unwrap_or(0) as u64) << 8 | scheme.bits as u64;
        rng::derive_seed(self.config.seed, id)
    }

    /// The VAE shared by every VAE cell, trained on first use.
    pub fn vae(&self) -> Result<VaeModel> {
        cached(&self.vae, || self.config.vae.fit(self.train_frames.view(), rng::derive_seed(self.config.seed, 0x7AE)))
    }

    /// Fits `scheme` on the training frames.
    pub fn fit_scheme(&self, scheme: SchemeConfig) -> Result<FittedScheme> {
        self.check(&scheme)?;
        let vae = if scheme.variant.uses_vae() { Some(self.vae()?) } else { None };
        FittedScheme::fit(scheme, self.train_frames.view(), self.cell_seed(&scheme), vae.as_ref())
    }

    fn check(&self, scheme: &SchemeConfig) -> Result<()> {
        self.config.check_scheme(scheme)?;
        if let Some(n) = scheme.n_pca {
            if n > self.dim() {
                return Err(Error::config(format!("n_pca = {n} exceeds the {} retained subcarriers", self.dim())));
            }
        }
        Ok(())
    }

    /// Per-window classifier inputs from a frame-level representation.
    fn features(&self, source: ArrayView2<'_, f64>, windows: &[&Window]) -> Result<Array2<f64>> {
        let d = source.ncols();
        match self.config.classifier {
            ClassifierKind::Threshold => {
                let mut out = Array2::zeros((windows.len(), 1));
                for (i, w) in windows.iter().enumerate() {
                    out[[i, 0]] = compute_a_star(w.matrix(source))?.a_star;
                }
                Ok(out)
            }
            ClassifierKind::Mlp if self.config.summarize => Ok(summarize_windows(source, windows)),
            ClassifierKind::Mlp => {
                let len = windows.first().map_or(0, |w| w.length);
                let mut out = Array2::zeros((windows.len(), len * d));
                for (mut row, w) in out.outer_iter_mut().zip(windows) {
                    for (dst, src) in row.iter_mut().zip(w.matrix(source).iter()) {
                        *dst = *src;
                    }
                }
                Ok(out)
            }
        }
    }

    fn train_classifier(&self, source: ArrayView2<'_, f64>, seed: u64) -> Result<TrainedClassifier> {
        match self.config.classifier {
            ClassifierKind::Threshold => {
                let windows: Vec<&Window> = self.split.train.iter().collect();
                let x = self.features(source, &windows)?;
                let samples: Vec<(f64, bool)> = windows.iter().zip(x.column(0)).map(|(w, &a)| (a, w.label == 1)).collect();
                Ok(TrainedClassifier::Threshold(fit_threshold(&samples)?))
            }
            ClassifierKind::Mlp => {
                let windows = window_rows(&self.split.train, self.config.train_window_step);
                let x = self.features(source, &windows)?;
                let y: Vec<u16> = windows.iter().map(|w| w.label).collect();
                let cfg = MlpConfig { seed, ..self.config.mlp.clone() };
                Ok(TrainedClassifier::Mlp(MlpClassifier::train(x.view(), &y, self.classes, &cfg)?.0))
            }
        }
    }

    fn predict(&self, clf: &TrainedClassifier, source: ArrayView2<'_, f64>) -> Result<Vec<u16>> {
        let windows: Vec<&Window> = self.split.test.iter().collect();
        let x = self.features(source, &windows)?;
        match clf {
            TrainedClassifier::Threshold(t) => Ok(x.column(0).iter().map(|&a| t.predict(a) as u16).collect()),
            TrainedClassifier::Mlp(m) => m.predict_rows(x.view()),
        }
    }

    /// The representation a classifier sees: latent parameters for VAE
    /// schemes, reconstructed (non-negative) amplitudes otherwise, exactly as a
    /// decompressed file would carry them.
    fn representation(&self, scheme: &FittedScheme, coords: Array2<f64>, decoded: Array2<f64>) -> Result<Array2<f64>> {
        Ok(match scheme.config.variant {
            Variant::Uncompressed => self.amplitudes.clone(),
            v if v.uses_vae() => coords,
            _ => self.normalizer.invert(decoded.view())?.mapv(|v| v.max(0.0)),
        })
    }

    /// Retained-subcarrier amplitudes of every frame.
    pub fn amplitudes(&self) -> ArrayView2<'_, f64> {
        self.amplitudes.view()
    }

    /// The classifier trained on uncompressed training windows.
    pub fn reference_classifier(&self) -> Result<TrainedClassifier> {
        cached(&self.reference, || self.train_classifier(self.amplitudes.view(), rng::derive_seed(self.config.seed, 0xC1A5)))
    }

    /// Trains a classifier on the training windows of a frame-level
    /// representation (one row per frame).
    pub fn fit_classifier(&self, source: ArrayView2<'_, f64>) -> Result<TrainedClassifier> {
        self.check_rows(source)?;
        self.train_classifier(source, rng::derive_seed(self.config.seed, 0xC1A5))
    }

    /// Scores `clf` on the test windows of `source`; returns the predictions
    /// (one per test window), the confusion matrix and the F1 score.
    pub fn score(&self, clf: &TrainedClassifier, source: ArrayView2<'_, f64>) -> Result<(Vec<u16>, ConfusionMatrix, f64)> {
        self.check_rows(source)?;
        if clf.kind() != self.config.classifier {
            return Err(Error::config(format!("a {} model cannot run a {} experiment", clf.kind(), self.config.classifier)));
        }
        let predicted = self.predict(clf, source)?;
        let truth: Vec<u16> = self.split.test.iter().map(|w| w.label).collect();
        let confusion = ConfusionMatrix::from_predictions(self.classes, &truth, &predicted)?;
        let f1 = confusion.f1_report(self.f1_mode())?.f1;
        Ok((predicted, confusion, f1))
    }

    fn check_rows(&self, source: ArrayView2<'_, f64>) -> Result<()> {
        if source.nrows() != self.amplitudes.nrows() {
            return Err(Error::shape(format!("{} frames, experiment has {}", source.nrows(), self.amplitudes.nrows())));
        }
        Ok(())
    }

    /// Runs `scheme` and scores the classifier on the test windows.
    pub fn evaluate(&self, scheme: SchemeConfig) -> Result<CellOutcome> {
        let fitted = self.fit_scheme(scheme)?;
        let (coords, decoded) = fitted.round_trip(self.normalized.view())?;
        let uses_vae = scheme.variant.uses_vae();
        let source = self.representation(&fitted, coords, decoded)?;
        let clf_seed = rng::derive_seed(self.cell_seed(&scheme), 0xC1A5);
        let clf = match self.config.mode {
            TrainingMode::Compressed => self.train_classifier(source.view(), clf_seed)?,
            TrainingMode::Uncompressed if uses_vae => cached(&self.latent_reference, || {
                let latents = self.vae()?.latent_params(self.normalized.view())?;
                self.train_classifier(latents.view(), rng::derive_seed(self.config.seed, 0xC1A5))
            })?,
            TrainingMode::Uncompressed => self.reference_classifier()?,
        };
        let (_, confusion, f1) = self.score(&clf, source.view())?;
        Ok(CellOutcome { scheme, rate: fitted.rate(), f1, confusion })
    }

    pub fn baseline(&self) -> Result<CellOutcome> {
        self.evaluate(SchemeConfig::uncompressed())
    }

    /// Evaluates `scheme` against an already computed baseline F1.
    pub fn point(&self, scheme: SchemeConfig, baseline_f1: f64) -> Result<TradeoffPoint> {
        let cell = self.evaluate(scheme)?;
        Ok(TradeoffPoint { scheme, rate: cell.rate, f1: cell.f1, f1_loss_percent: relative_f1_loss(baseline_f1, cell.f1) })
    }
}

/// Per-dimension mean and sample std of every window, via running sums.
fn summarize_windows(source: ArrayView2<'_, f64>, windows: &[&Window]) -> Array2<f64> {
    let (n, d) = source.dim();
    let mut s1 = Array2::<f64>::zeros((n + 1, d));
    let mut s2 = Array2::<f64>::zeros((n + 1, d));
    for i in 0..n {
        for j in 0..d {
            let v = source[[i, j]];
            s1[[i + 1, j]] = s1[[i, j]] + v;
            s2[[i + 1, j]] = s2[[i, j]] + v * v;
        }
    }
    let mut out = Array2::zeros((windows.len(), 2 * d));
    for (k, w) in windows.iter().enumerate() {
        let (a, b) = (w.start, w.start + w.length);
        let len = w.length as f64;
        for j in 0..d {
            let sum = s1[[b, j]] - s1[[a, j]];
            let sq = s2[[b, j]] - s2[[a, j]];
            let mean = sum / len;
            let var = if w.length > 1 { ((sq - sum * mean) / (len - 1.0)).max(0.0) } else { 0.0 };
            out[[k, j]] = mean;
            out[[k, d + j]] = var.sqrt();
        }
    }
    out
}

/// Prepares `dataset` and returns the trade-off point of `scheme` against the
/// uncompressed baseline.
pub fn run_experiment(dataset: &CsiDataset, scheme: SchemeConfig, config: ExperimentConfig) -> Result<TradeoffPoint> {
    config.check_scheme(&scheme)?;
    let exp = Experiment::prepare(dataset, config)?;
    let baseline = exp.baseline()?;
    exp.point(scheme, baseline.f1)
}
