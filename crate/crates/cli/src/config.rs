//! TOML experiment configuration (schema version 1).
//!
//! ```toml
//! version = 1
//!
//! [dataset]
//! source = "synth"          # "synth" | "csv" | "cifar10"
//! kind = "two_moons"        # synth: "two_moons" | "blobs" | "rings"
//! n = 4000
//! noise = 0.1
//! seed = 1
//! # source = "csv":     path = "data.csv", label_column = "label"
//! # source = "cifar10": dir = "cifar-10-batches-bin", include = "both"
//!
//! [split]
//! test_fraction = 0.25
//! seed = 0
//! stratified = true
//!
//! [experiment]
//! norm = "linf"             # "linf" | "l2"
//! eps_train = [0.0, 0.005, 0.01]
//! eps_test = [0.0]
//! include_eps_min = true
//! k_train = 10
//! k_test = 10
//! runs = 200
//! master_seed = 42
//! clip_to_unit = false
//!
//! [[model]]
//! kind = "random_forest"    # "knn" | "random_forest"
//! rf_trees = 100
//! # knn_neighbors = 1
//! # rf_max_depth = 12       (omit for unlimited)
//! # rf_min_leaf = 1
//! # rf_feature_subsample = "sqrt"   # "all" | "sqrt"
//! ```

use std::path::Path;

use serde::Deserialize;

use mscr_core::{
    CifarInclude, DatasetSource, Error, ExperimentPlan, FeatureSubsample, ModelKind, ModelSpec,
    NormMetric, Result, SplitSpec, SynthKind,
};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub version: u64,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitConfig,
    pub experiment: ExperimentConfig,
    #[serde(default, rename = "model")]
    pub models: Vec<ModelConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub source: String,
    // synth
    pub kind: Option<String>,
    pub n: Option<usize>,
    pub noise: Option<f64>,
    pub seed: Option<u64>,
    // csv
    pub path: Option<String>,
    pub label_column: Option<String>,
    // cifar10
    pub dir: Option<String>,
    pub include: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub test_fraction: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub stratified: bool,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.25,
            seed: 0,
            stratified: true,
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub norm: String,
    pub eps_train: Vec<f64>,
    pub eps_test: Vec<f64>,
    #[serde(default = "default_true")]
    pub include_eps_min: bool,
    #[serde(default = "default_k")]
    pub k_train: usize,
    #[serde(default = "default_k")]
    pub k_test: usize,
    pub runs: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub clip_to_unit: bool,
}

fn default_k() -> usize {
    10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    pub knn_neighbors: Option<usize>,
    pub rf_trees: Option<usize>,
    pub rf_max_depth: Option<usize>,
    pub rf_min_leaf: Option<usize>,
    pub rf_feature_subsample: Option<String>,
    #[serde(default)]
    pub seed: u64,
    pub path: Option<String>,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> Result<Config> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: Config = toml::from_str(&text)
            .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        if config.version != SCHEMA_VERSION {
            return Err(Error::Validation(format!(
                "{}: unsupported config version {} (supported: {SCHEMA_VERSION})",
                path.display(),
                config.version
            )));
        }
        Ok(config)
    }

    pub fn dataset_source(&self) -> Result<DatasetSource> {
        let d = &self.dataset;
        match d.source.as_str() {
            "synth" => Ok(DatasetSource::Synth {
                kind: SynthKind::parse(d.kind.as_deref().unwrap_or("two_moons"))?,
                n: d.n.unwrap_or(4000),
                noise: d.noise.unwrap_or(0.1),
                seed: d.seed.unwrap_or(1),
            }),
            "csv" => {
                let path = d.path.clone().ok_or_else(|| {
                    Error::Validation("csv dataset needs a `path`".into())
                })?;
                Ok(DatasetSource::Csv {
                    path,
                    label_column: d.label_column.clone().unwrap_or_else(|| "label".into()),
                })
            }
            "cifar10" => {
                let dir = d.dir.clone().ok_or_else(|| {
                    Error::Validation("cifar10 dataset needs a `dir`".into())
                })?;
                let include = match d.include.as_deref().unwrap_or("both") {
                    "train" => CifarInclude::Train,
                    "test" => CifarInclude::Test,
                    "both" => CifarInclude::Both,
                    other => {
                        return Err(Error::Validation(format!(
                            "unknown cifar10 include {other:?} (train, test or both)"
                        )))
                    }
                };
                Ok(DatasetSource::Cifar10 { dir, include })
            }
            other => Err(Error::Validation(format!(
                "unknown dataset source {other:?} (synth, csv or cifar10)"
            ))),
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.split.test_fraction,
            seed: self.split.seed,
            stratified: self.split.stratified,
        }
    }

    pub fn norm(&self) -> Result<NormMetric> {
        NormMetric::parse(&self.experiment.norm)
    }

    pub fn model_specs(&self) -> Result<Vec<ModelSpec>> {
        self.models.iter().map(|m| m.to_spec()).collect()
    }

    /// Assembles the full plan; `seed_override` replaces the master seed.
    pub fn plan(&self, seed_override: Option<u64>) -> Result<ExperimentPlan> {
        let plan = ExperimentPlan {
            dataset: self.dataset_source()?,
            split: self.split_spec(),
            norm: self.norm()?,
            eps_train_grid: self.experiment.eps_train.clone(),
            eps_test_grid: self.experiment.eps_test.clone(),
            include_eps_min: self.experiment.include_eps_min,
            k_train: self.experiment.k_train,
            k_test: self.experiment.k_test,
            runs: self.experiment.runs,
            clip_to_unit: self.experiment.clip_to_unit,
            model_specs: self.model_specs()?,
            master_seed: seed_override.unwrap_or(self.experiment.master_seed),
        };
        plan.validate()?;
        Ok(plan)
    }
}

impl ModelConfig {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let base = match self.kind.as_str() {
            "knn" => ModelSpec::knn(),
            "random_forest" | "rf" => ModelSpec::random_forest(),
            "external" => ModelSpec {
                kind: ModelKind::External,
                external_path: self.path.clone(),
                ..ModelSpec::knn()
            },
            other => {
                return Err(Error::Validation(format!(
                    "unknown model kind {other:?} (knn, random_forest or external)"
                )))
            }
        };
        let rf_feature_subsample = match self.rf_feature_subsample.as_deref() {
            None => base.rf_feature_subsample,
            Some("all") => FeatureSubsample::All,
            Some("sqrt") => FeatureSubsample::Sqrt,
            Some(other) => {
                return Err(Error::Validation(format!(
                    "unknown rf_feature_subsample {other:?} (all or sqrt)"
                )))
            }
        };
        let spec = ModelSpec {
            knn_neighbors: self.knn_neighbors.unwrap_or(base.knn_neighbors),
            rf_trees: self.rf_trees.unwrap_or(base.rf_trees),
            rf_max_depth: self.rf_max_depth.or(base.rf_max_depth),
            rf_min_leaf: self.rf_min_leaf.unwrap_or(base.rf_min_leaf),
            rf_feature_subsample,
            seed: self.seed,
            ..base
        };
        spec.validate()?;
        Ok(spec)
    }
}
