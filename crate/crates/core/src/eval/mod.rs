//! Scoring, single experiments and rate / F1-loss sweeps.

pub mod experiment;
pub mod metrics;
pub mod report;
pub mod sweep;

pub use experiment::{TrainedClassifier, 
    run_experiment, CellOutcome, ClassifierKind, Experiment, ExperimentConfig, Task, TradeoffPoint, TrainingMode,
};
pub use metrics::{f1_score, relative_f1_loss, ConfusionMatrix, F1Mode, F1Report};
pub use report::{emit_report, read_sweep_csv, summarize, write_sweep_csv, SweepRow};
pub use sweep::{dataset_fingerprint, sweep, SweepCell, SweepGrid, SweepResult};
