//! Corruption-robustness evaluation for classifiers via minimal class
//! separation.
//!
//! The toolkit measures a dataset's minimal inter-class distance 2r,
//! augments data with uniform Lp-ball noise at radius eps_min = r (the
//! largest radius at which a classifier can still be both accurate and
//! fully robust), trains reference classifiers across noise levels, and
//! reports robust-accuracy matrices, MSCR values and tradeoff curves with
//! confidence intervals.
//!
//! Modules follow the pipeline:
//!
//! - [`dataset`]: loading, normalization, splitting, synthesis
//! - [`separation`]: exact minimal class separation (oracle + pruned search)
//! - [`augmentation`]: uniform Lp-ball corruption sampling
//! - [`classifiers`]: 1NN and random forest, plus external prediction files
//! - [`metrics`]: accuracy, MSCR, Student-t confidence intervals
//! - [`experiment`]: orchestration across eps_train x eps_test grids
//! - [`report`]: CSV / JSON / SVG rendering

pub mod augmentation;
pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod separation;

pub use augmentation::{augment, sample_ball, write_augmented_csv, Augmented, AugmentationConfig};
pub use classifiers::{
    load_external_predictions, load_model, predict, predict_dataset, save_model, train,
    FeatureSubsample, ModelKind, ModelSpec, PredictionTable, TrainedModel,
};
pub use dataset::{
    load_cifar10_binary, load_csv, split, synth_2d, write_csv, CifarInclude, Dataset, LabelColumn,
    SplitSpec, SynthKind,
};
pub use error::{Error, Result};
pub use experiment::{
    k_convergence_study, optima_report, run_experiment, tradeoff_curve, AccuracyMatrix,
    DatasetSource, ExperimentPlan, KStudy, MatrixCell, OptimaReport, TradeoffPoint,
};
pub use metrics::{
    accuracy, mean_ci, mean_ci95, mscr, paired_mean_above_zero, EpsAccuracy, MetricSummary,
    RunRecord,
};
pub use report::{render, render_kstudy, ReportBundle, ReportMetadata};
pub use separation::{
    min_class_separation, min_class_separation_oracle, per_point_margin, NormMetric,
    SeparationResult,
};
