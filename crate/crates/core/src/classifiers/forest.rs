//! Random forest: bagged Gini trees with majority voting.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::rng::mix_seed;

use super::tree::{majority_label, DecisionTree, TreeParams};
use super::{FeatureSubsample, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub(crate) trees: Vec<DecisionTree>,
    pub(crate) class_count: usize,
    pub(crate) dim: usize,
}

impl ForestModel {
    /// Trains `spec.rf_trees` trees, each on a bootstrap sample of size n
    /// drawn with replacement from its own (seed, tree index) sub-stream.
    /// Training is parallel over trees and bit-reproducible for any thread
    /// count.
    pub(crate) fn fit(spec: &ModelSpec, data: &Dataset) -> ForestModel {
        let n = data.n();
        let features_per_node = match spec.rf_feature_subsample {
            FeatureSubsample::All => data.d(),
            FeatureSubsample::Sqrt => ((data.d() as f64).sqrt().floor() as usize).max(1),
        };
        let params = TreeParams {
            max_depth: spec.rf_max_depth,
            min_leaf: spec.rf_min_leaf,
            features_per_node,
        };
        let trees: Vec<DecisionTree> = (0..spec.rf_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.seed, &[t as u64]));
                let mut indices: Vec<u32> =
                    (0..n).map(|_| rng.random_range(0..n) as u32).collect();
                DecisionTree::fit(data, &mut indices, &params, &mut rng)
            })
            .collect();
        ForestModel {
            trees,
            class_count: data.class_count(),
            dim: data.d(),
        }
    }

    /// Majority vote over trees; vote ties go to the smallest label.
    pub fn predict_row(&self, row: &[f64]) -> u32 {
        let mut votes = vec![0usize; self.class_count];
        for tree in &self.trees {
            votes[tree.predict_row(row) as usize] += 1;
        }
        majority_label(&votes)
    }

    pub fn tree_count(&self) -> usize {
        self.trees.len()
    }

    /// Per-tree predictions for one row; the public vote must equal the
    /// documented tie-break over these.
    pub fn tree_votes(&self, row: &[f64]) -> Vec<u32> {
        self.trees.iter().map(|t| t.predict_row(row)).collect()
    }
}
