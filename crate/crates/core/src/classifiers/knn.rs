//! k-nearest-neighbor classifier under the experiment's norm.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::separation::NormMetric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub(crate) features: Vec<f64>,
    pub(crate) labels: Vec<u32>,
    pub(crate) dim: usize,
    pub(crate) k: usize,
    pub(crate) norm: NormMetric,
    pub(crate) class_count: usize,
}

impl KnnModel {
    pub(crate) fn fit(data: &Dataset, k: usize, norm: NormMetric) -> KnnModel {
        KnnModel {
            features: data.features().to_vec(),
            labels: data.labels().to_vec(),
            dim: data.d(),
            k: k.min(data.n()),
            norm,
            class_count: data.class_count(),
        }
    }

    /// Majority label among the k nearest training points, neighbors ranked
    /// by (distance, index); label ties go to the smallest label.
    ///
    /// Internally compares squared distances for L2, so candidate ordering
    /// never suffers sqrt rounding collisions.
    pub fn predict_row(&self, row: &[f64]) -> u32 {
        let n = self.labels.len();
        // neighbors kept sorted ascending by (key, index); worst key is the
        // early-exit bound once the list is full
        let mut near: Vec<(f64, u32)> = Vec::with_capacity(self.k + 1);
        for i in 0..n {
            let train_row = &self.features[i * self.dim..(i + 1) * self.dim];
            let bound = if near.len() == self.k {
                near[self.k - 1].0
            } else {
                f64::INFINITY
            };
            let Some(key) = partial_key(self.norm, row, train_row, bound) else {
                continue;
            };
            if near.len() == self.k {
                let worst = near[self.k - 1];
                if (key, i as u32) >= (worst.0, worst.1) {
                    continue;
                }
            }
            let at = near.partition_point(|&(d, j)| (d, j) < (key, i as u32));
            near.insert(at, (key, i as u32));
            if near.len() > self.k {
                near.pop();
            }
        }
        let mut votes = vec![0usize; self.class_count];
        for &(_, i) in &near {
            votes[self.labels[i as usize] as usize] += 1;
        }
        super::tree::majority_label(&votes)
    }
}

/// Running comparison key with early exit once it strictly exceeds `bound`.
#[inline]
fn partial_key(norm: NormMetric, a: &[f64], b: &[f64], bound: f64) -> Option<f64> {
    match norm {
        NormMetric::Linf => {
            let mut max_gap = 0.0f64;
            for (x, y) in a.iter().zip(b) {
                let gap = (x - y).abs();
                if gap > bound {
                    return None;
                }
                if gap > max_gap {
                    max_gap = gap;
                }
            }
            Some(max_gap)
        }
        NormMetric::L2 => {
            let mut sum = 0.0f64;
            for (x, y) in a.iter().zip(b) {
                let diff = x - y;
                sum += diff * diff;
                if sum > bound {
                    return None;
                }
            }
            Some(sum)
        }
    }
}
