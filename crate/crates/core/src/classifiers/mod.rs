//! Reference classifiers behind one train/predict interface: 1NN (inherently
//! robust, classifies by distance to the nearest training point) and a
//! 100-tree random forest, plus scoring of externally produced predictions.

pub(crate) mod external;
mod forest;
mod knn;
mod store;
mod tree;

pub use external::{load_external_predictions, PredictionTable};
pub use forest::ForestModel;
pub use knn::KnnModel;
pub use store::{load_model, save_model};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::separation::NormMetric;

/// Classifier family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Knn,
    RandomForest,
    /// Placeholder for models trained elsewhere; scored from prediction
    /// files, never trained here.
    External,
}

/// Feature subsampling at each tree node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubsample {
    All,
    Sqrt,
}

/// Full description of a model to train (or score).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub knn_neighbors: usize,
    pub rf_trees: usize,
    /// `None` grows trees until pure or `rf_min_leaf` stops them.
    pub rf_max_depth: Option<usize>,
    pub rf_min_leaf: usize,
    pub rf_feature_subsample: FeatureSubsample,
    pub seed: u64,
    /// Prediction file for `External` models.
    pub external_path: Option<String>,
}

impl ModelSpec {
    /// 1-nearest-neighbor under the experiment's norm.
    pub fn knn() -> ModelSpec {
        ModelSpec {
            kind: ModelKind::Knn,
            knn_neighbors: 1,
            rf_trees: 100,
            rf_max_depth: None,
            rf_min_leaf: 1,
            rf_feature_subsample: FeatureSubsample::Sqrt,
            seed: 0,
            external_path: None,
        }
    }

    /// Random forest with 100 trees, unlimited depth, min_leaf 1, sqrt
    /// feature subsampling, bootstrap samples of size n.
    pub fn random_forest() -> ModelSpec {
        ModelSpec {
            kind: ModelKind::RandomForest,
            ..ModelSpec::knn()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> ModelSpec {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ModelKind::Knn => {
                if self.knn_neighbors == 0 {
                    return Err(Error::Validation("knn_neighbors must be >= 1".into()));
                }
            }
            ModelKind::RandomForest => {
                if self.rf_trees == 0 {
                    return Err(Error::Validation("rf_trees must be >= 1".into()));
                }
                if self.rf_min_leaf == 0 {
                    return Err(Error::Validation("rf_min_leaf must be >= 1".into()));
                }
            }
            ModelKind::External => {
                if self.external_path.is_none() {
                    return Err(Error::Validation(
                        "external model needs external_path".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Stable identifier used in reports, e.g. `1nn` or `rf100`.
    pub fn model_id(&self) -> String {
        match self.kind {
            ModelKind::Knn => format!("{}nn", self.knn_neighbors),
            ModelKind::RandomForest => format!("rf{}", self.rf_trees),
            ModelKind::External => "external".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum FittedState {
    Knn(KnnModel),
    Forest(ForestModel),
}

/// A trained classifier; prediction is a pure function of the fitted state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub(crate) spec: ModelSpec,
    pub(crate) training_set_fingerprint: String,
    pub(crate) state: FittedState,
}

impl TrainedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn training_set_fingerprint(&self) -> &str {
        &self.training_set_fingerprint
    }

    pub fn dim(&self) -> usize {
        match &self.state {
            FittedState::Knn(m) => m.dim,
            FittedState::Forest(m) => m.dim,
        }
    }
}

/// Trains `spec` on `train_set`. kNN measures distance under `norm` (the
/// experiment's corruption norm); the forest ignores it. Deterministic
/// under `spec.seed` for any thread count.
pub fn train(spec: &ModelSpec, train_set: &Dataset, norm: NormMetric) -> Result<TrainedModel> {
    spec.validate()?;
    if train_set.n() == 0 {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    let state = match spec.kind {
        ModelKind::Knn => FittedState::Knn(KnnModel::fit(train_set, spec.knn_neighbors, norm)),
        ModelKind::RandomForest => FittedState::Forest(ForestModel::fit(spec, train_set)),
        ModelKind::External => {
            return Err(Error::Validation(
                "external models are scored from prediction files, not trained".into(),
            ))
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        training_set_fingerprint: train_set.fingerprint(),
        state,
    })
}

/// Predicts one label per row of the row-major `points` buffer.
pub fn predict(model: &TrainedModel, points: &[f64], d: usize) -> Result<Vec<u32>> {
    if d != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: d,
        });
    }
    if points.len() % d != 0 {
        return Err(Error::Validation(format!(
            "point buffer of {} values is not a multiple of d = {d}",
            points.len()
        )));
    }
    let rows = points.len() / d;
    let out: Vec<u32> = (0..rows)
        .into_par_iter()
        .map(|i| {
            let row = &points[i * d..(i + 1) * d];
            match &model.state {
                FittedState::Knn(m) => m.predict_row(row),
                FittedState::Forest(m) => m.predict_row(row),
            }
        })
        .collect();
    Ok(out)
}

/// Convenience: predict every row of a dataset.
pub fn predict_dataset(model: &TrainedModel, data: &Dataset) -> Result<Vec<u32>> {
    predict(model, data.features(), data.d())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_2d, SynthKind};

    #[test]
    fn knn_memorizes_under_both_norms() {
        let data = synth_2d(SynthKind::TwoMoons, 60, 0.03, 4).unwrap();
        for norm in [NormMetric::Linf, NormMetric::L2] {
            let model = train(&ModelSpec::knn(), &data, norm).unwrap();
            let preds = predict_dataset(&model, &data).unwrap();
            assert_eq!(preds, data.labels());
        }
    }

    #[test]
    fn same_spec_seed_and_data_predict_identically() {
        let data = synth_2d(SynthKind::Rings, 150, 0.08, 2).unwrap();
        let probe = synth_2d(SynthKind::Rings, 50, 0.12, 3).unwrap();
        let spec = ModelSpec::random_forest().with_seed(99);
        let a = train(&spec, &data, NormMetric::Linf).unwrap();
        let b = train(&spec, &data, NormMetric::Linf).unwrap();
        assert_eq!(
            predict_dataset(&a, &probe).unwrap(),
            predict_dataset(&b, &probe).unwrap()
        );
    }

    #[test]
    fn prediction_is_invariant_to_query_order() {
        let data = synth_2d(SynthKind::TwoMoons, 100, 0.1, 8).unwrap();
        let model = train(&ModelSpec::random_forest().with_seed(1), &data, NormMetric::L2).unwrap();
        let probe = synth_2d(SynthKind::TwoMoons, 30, 0.2, 9).unwrap();
        let forward = predict_dataset(&model, &probe).unwrap();
        let reversed_rows: Vec<f64> = (0..probe.n())
            .rev()
            .flat_map(|i| probe.row(i).to_vec())
            .collect();
        let mut backward = predict(&model, &reversed_rows, probe.d()).unwrap();
        backward.reverse();
        assert_eq!(forward, backward);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let data = synth_2d(SynthKind::Blobs, 20, 0.1, 1).unwrap();
        let model = train(&ModelSpec::knn(), &data, NormMetric::L2).unwrap();
        assert!(matches!(
            predict(&model, &[0.1, 0.2, 0.3], 3),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn external_kind_cannot_be_trained() {
        let data = synth_2d(SynthKind::Blobs, 20, 0.1, 1).unwrap();
        let spec = ModelSpec {
            kind: ModelKind::External,
            external_path: Some("preds.csv".into()),
            ..ModelSpec::knn()
        };
        assert!(train(&spec, &data, NormMetric::L2).is_err());
    }

    #[test]
    fn model_round_trips_through_store() {
        let data = synth_2d(SynthKind::TwoMoons, 80, 0.07, 12).unwrap();
        let probe = synth_2d(SynthKind::TwoMoons, 25, 0.1, 13).unwrap();
        for spec in [
            ModelSpec::knn().with_seed(5),
            ModelSpec {
                rf_trees: 15,
                rf_max_depth: Some(6),
                ..ModelSpec::random_forest().with_seed(5)
            },
        ] {
            let model = train(&spec, &data, NormMetric::Linf).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("model.bin");
            save_model(&model, &path).unwrap();
            let loaded = load_model(&path).unwrap();
            assert_eq!(model, loaded);
            assert_eq!(
                predict_dataset(&model, &probe).unwrap(),
                predict_dataset(&loaded, &probe).unwrap()
            );
        }
    }

    #[test]
    fn serialized_forest_is_byte_identical_across_thread_counts() {
        let data = synth_2d(SynthKind::Rings, 90, 0.06, 3).unwrap();
        let spec = ModelSpec {
            rf_trees: 12,
            ..ModelSpec::random_forest().with_seed(44)
        };
        let bytes_for = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let model = pool.install(|| train(&spec, &data, NormMetric::L2).unwrap());
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.bin");
            save_model(&model, &path).unwrap();
            std::fs::read(&path).unwrap()
        };
        assert_eq!(bytes_for(1), bytes_for(4));
    }
}
