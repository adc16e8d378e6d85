//! End-to-end experiment orchestration: repeated seeded runs over an
//! eps_train x eps_test grid, per-run accuracy and MSCR records, and
//! summaries with confidence intervals.

mod analysis;
mod runner;

pub use analysis::{
    optima_report, tradeoff_curve, Deviation, OptimaReport, OptimaRow, TradeoffPoint,
};
pub use runner::{k_convergence_study, run_experiment, KStudy, KStudyRow};

use serde::{Deserialize, Serialize};

use crate::classifiers::{ModelKind, ModelSpec};
use crate::dataset::{
    load_cifar10_binary, load_csv, synth_2d, CifarInclude, Dataset, LabelColumn, SplitSpec,
    SynthKind,
};
use crate::error::{Error, Result};
use crate::metrics::{MetricSummary, RunRecord};
use crate::separation::NormMetric;

/// Where the experiment's dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Csv { path: String, label_column: String },
    Cifar10 { dir: String, include: CifarInclude },
    Synth { kind: SynthKind, n: usize, noise: f64, seed: u64 },
    /// An already-loaded dataset (library callers, tests).
    InMemory(Dataset),
}

impl DatasetSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSource::Csv { path, label_column } => {
                load_csv(path, &LabelColumn::parse(label_column))
            }
            DatasetSource::Cifar10 { dir, include } => load_cifar10_binary(dir, *include),
            DatasetSource::Synth { kind, n, noise, seed } => synth_2d(*kind, *n, *noise, *seed),
            DatasetSource::InMemory(ds) => Ok(ds.clone()),
        }
    }
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub dataset: DatasetSource,
    pub split: SplitSpec,
    pub norm: NormMetric,
    /// Training corruption radii; 0 trains on the raw data.
    pub eps_train_grid: Vec<f64>,
    /// Test corruption radii; 0 means the clean test set.
    pub eps_test_grid: Vec<f64>,
    /// Measure epsilon_min and inject it into both grids; required for MSCR.
    pub include_eps_min: bool,
    pub k_train: usize,
    pub k_test: usize,
    pub runs: usize,
    /// Clamp augmented coordinates to [0, 1] (recommended for image data).
    pub clip_to_unit: bool,
    pub model_specs: Vec<ModelSpec>,
    pub master_seed: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        for (name, grid) in [
            ("eps_train", &self.eps_train_grid),
            ("eps_test", &self.eps_test_grid),
        ] {
            if grid.is_empty() {
                return Err(Error::Validation(format!("{name} grid is empty")));
            }
            for &e in grid {
                if !(e.is_finite() && e >= 0.0) {
                    return Err(Error::Validation(format!(
                        "{name} grid value {e} must be finite and >= 0"
                    )));
                }
            }
            if grid.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Validation(format!(
                    "{name} grid must be strictly ascending"
                )));
            }
        }
        if self.runs == 0 {
            return Err(Error::Validation("runs must be >= 1".into()));
        }
        if self.k_train == 0 || self.k_test == 0 {
            return Err(Error::Validation("k_train and k_test must be >= 1".into()));
        }
        if self.model_specs.is_empty() {
            return Err(Error::Validation("at least one model spec required".into()));
        }
        for spec in &self.model_specs {
            spec.validate()?;
            if spec.kind == ModelKind::External {
                return Err(Error::Validation(
                    "external models cannot drive run_experiment; export augmented data and \
                     score their prediction files instead"
                        .into(),
                ));
            }
        }
        let mut ids: Vec<String> = self.model_specs.iter().map(|s| s.model_id()).collect();
        ids.sort();
        ids.dedup();
        if ids.len() != self.model_specs.len() {
            return Err(Error::Validation(
                "model specs must have distinct ids (same kind and size given twice)".into(),
            ));
        }
        Ok(())
    }
}

/// One summarized cell: a (model, eps_train) column of the accuracy matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub model_id: String,
    pub eps_train: f64,
    pub clean: MetricSummary,
    /// Robust-accuracy summary per eps_test, grid order. Entry 0 of the
    /// grid (eps_test = 0) repeats the clean summary.
    pub robust: Vec<MetricSummary>,
    /// Absent when epsilon_min was not measured/tested.
    pub mscr: Option<MetricSummary>,
}

/// Positions of highlighted cells for one model: Table-2-style markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAnnotations {
    pub model_id: String,
    /// For each eps_test row: index into `eps_train_grid` with the best
    /// mean (robust) accuracy; ties resolve to the smaller eps_train.
    pub best_eps_train_per_row: Vec<usize>,
    /// (row, column) cells where eps_train == eps_test.
    pub diagonal: Vec<(usize, usize)>,
    /// (row, column) of the maximum overall mean accuracy.
    pub global_optimum: (usize, usize),
}

/// Aggregated experiment output: summaries, per-run records, markers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyMatrix {
    pub model_ids: Vec<String>,
    pub eps_train_grid: Vec<f64>,
    pub eps_test_grid: Vec<f64>,
    /// Measured separation radius, when `include_eps_min` was set.
    pub epsilon_min: Option<f64>,
    pub norm: NormMetric,
    pub n_runs: usize,
    pub dataset_name: String,
    pub dataset_fingerprint: String,
    /// Model-major cells: `cells[m * eps_train_grid.len() + e]`.
    pub cells: Vec<MatrixCell>,
    pub annotations: Vec<ModelAnnotations>,
    /// Every per-run record, sorted by (run, model, eps_train).
    pub records: Vec<RunRecord>,
}

impl AccuracyMatrix {
    pub fn cell(&self, model_id: &str, eps_train: f64) -> Option<&MatrixCell> {
        self.cells
            .iter()
            .find(|c| c.model_id == model_id && c.eps_train == eps_train)
    }

    pub fn cells_for_model(&self, model_id: &str) -> Vec<&MatrixCell> {
        self.cells.iter().filter(|c| c.model_id == model_id).collect()
    }

    pub fn records_for(&self, model_id: &str, eps_train: f64) -> Vec<&RunRecord> {
        self.records
            .iter()
            .filter(|r| r.model_id == model_id && r.eps_train == eps_train)
            .collect()
    }

    /// True when MSCR summaries are present (epsilon_min was measured and
    /// injected into the test grid).
    pub fn has_mscr(&self) -> bool {
        self.cells.iter().all(|c| c.mscr.is_some())
    }
}
