//! CART decision tree with Gini-impurity splits.
//!
//! Grown depth-first until nodes are pure, too small to split, at max
//! depth, or no split reduces impurity. Split ties resolve to the smaller
//! feature index, then the smaller threshold; leaf-label ties to the
//! smaller label. Construction is fully deterministic given the same RNG
//! state (used only for per-node feature subsampling).
//!
//! Low-dimensional data uses presorted feature columns kept ordered
//! through stable partitions, so no per-node sorting is needed; wide data
//! (d > PRESORT_MAX_DIM) falls back to sorting the candidate column at
//! each node, which avoids the d * n presort footprint. Both paths build
//! bit-identical trees: splits are evaluated at the same distinct-value
//! boundaries with the same arithmetic.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;

const PRESORT_MAX_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { label: u32 },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub(crate) nodes: Vec<Node>,
}

pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Candidate features drawn per node; `d` means all.
    pub features_per_node: usize,
}

impl DecisionTree {
    /// Fits a tree on the rows of `data` listed in `indices` (bootstrap
    /// duplicates allowed).
    pub(crate) fn fit(
        data: &Dataset,
        indices: &mut Vec<u32>,
        params: &TreeParams,
        rng: &mut ChaCha8Rng,
    ) -> DecisionTree {
        let mut tree = DecisionTree { nodes: Vec::new() };
        tree.nodes.push(Node::Leaf { label: 0 }); // placeholder for the root
        let len = indices.len();

        if data.d() <= PRESORT_MAX_DIM {
            // one sorted copy of the rows per feature, stable through splits
            let mut cols: Vec<Vec<u32>> = (0..data.d())
                .map(|f| {
                    let mut order = indices.clone();
                    order.sort_by(|&a, &b| {
                        data.row(a as usize)[f]
                            .total_cmp(&data.row(b as usize)[f])
                            .then(a.cmp(&b))
                    });
                    order
                })
                .collect();
            let mut builder = PresortBuilder {
                data,
                params,
                class_count: data.class_count(),
                scratch: vec![0u32; len],
            };
            builder.grow(&mut tree, 0, &mut cols, 0, len, 0, rng);
        } else {
            let mut builder = SortingBuilder {
                data,
                params,
                class_count: data.class_count(),
            };
            builder.grow(&mut tree, 0, indices, 0, len, 0, rng);
        }
        tree
    }

    pub fn predict_row(&self, row: &[f64]) -> u32 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label } => return *label,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }
}

/// Shared split-decision logic: scans one feature's rows in ascending value
/// order and returns the best (decrease, threshold) for that feature.
///
/// `rows` must be the node's rows sorted by the feature. Only boundaries
/// between distinct values are evaluated, so the result is independent of
/// the order of equal values.
fn best_threshold_for_feature(
    data: &Dataset,
    feature: usize,
    rows: &[u32],
    parent_counts: &[usize],
    parent_gini: f64,
    min_leaf: usize,
    class_count: usize,
) -> Option<(f64, f64)> {
    let size = rows.len();
    let mut best: Option<(f64, f64)> = None;
    let mut left_counts = vec![0usize; class_count];
    let mut right_counts = parent_counts.to_vec();
    for pos in 0..size - 1 {
        let row = rows[pos] as usize;
        let label = data.label(row) as usize;
        left_counts[label] += 1;
        right_counts[label] -= 1;
        let value = data.row(row)[feature];
        let next_value = data.row(rows[pos + 1] as usize)[feature];
        if value == next_value {
            continue;
        }
        let n_left = pos + 1;
        let n_right = size - n_left;
        if n_left < min_leaf || n_right < min_leaf {
            continue;
        }
        let weighted = (n_left as f64 * gini(&left_counts, n_left)
            + n_right as f64 * gini(&right_counts, n_right))
            / size as f64;
        let decrease = parent_gini - weighted;
        if decrease <= 0.0 {
            continue;
        }
        let threshold = value + (next_value - value) / 2.0;
        let better = match best {
            None => true,
            Some((bd, bt)) => decrease > bd || (decrease == bd && threshold < bt),
        };
        if better {
            best = Some((decrease, threshold));
        }
    }
    best
}

fn node_counts(data: &Dataset, rows: &[u32], class_count: usize) -> Vec<usize> {
    let mut counts = vec![0usize; class_count];
    for &i in rows {
        counts[data.label(i as usize) as usize] += 1;
    }
    counts
}

fn should_stop(counts: &[usize], size: usize, depth: usize, params: &TreeParams) -> bool {
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    let depth_stop = params.max_depth.is_some_and(|m| depth >= m);
    pure || depth_stop || size < 2 * params.min_leaf || size < 2
}

/// Chooses the best (feature, threshold) among `candidates`; ties go to the
/// smaller feature, then the smaller threshold.
fn pick_best(
    per_feature: impl Iterator<Item = (usize, Option<(f64, f64)>)>,
) -> Option<(usize, f64)> {
    let mut best: Option<(f64, usize, f64)> = None;
    for (feature, result) in per_feature {
        let Some((decrease, threshold)) = result else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((bd, bf, bt)) => {
                decrease > *bd || (decrease == *bd && (feature, threshold) < (*bf, *bt))
            }
        };
        if better {
            best = Some((decrease, feature, threshold));
        }
    }
    best.map(|(_, f, t)| (f, t))
}

/// Builder for low-dimensional data: feature columns stay sorted.
struct PresortBuilder<'a> {
    data: &'a Dataset,
    params: &'a TreeParams,
    class_count: usize,
    scratch: Vec<u32>,
}

impl PresortBuilder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        tree: &mut DecisionTree,
        slot: usize,
        cols: &mut [Vec<u32>],
        lo: usize,
        hi: usize,
        depth: usize,
        rng: &mut ChaCha8Rng,
    ) {
        let size = hi - lo;
        let counts = node_counts(self.data, &cols[0][lo..hi], self.class_count);
        if should_stop(&counts, size, depth, self.params) {
            tree.nodes[slot] = Node::Leaf { label: majority_label(&counts) };
            return;
        }
        let candidates = sample_features(self.data.d(), self.params.features_per_node, rng);
        let parent_gini = gini(&counts, size);
        let split = pick_best(candidates.iter().map(|&f| {
            (
                f,
                best_threshold_for_feature(
                    self.data,
                    f,
                    &cols[f][lo..hi],
                    &counts,
                    parent_gini,
                    self.params.min_leaf,
                    self.class_count,
                ),
            )
        }));
        let Some((feature, threshold)) = split else {
            tree.nodes[slot] = Node::Leaf { label: majority_label(&counts) };
            return;
        };

        // stable partition of every column keeps each one sorted
        let mut mid = lo;
        for col in cols.iter_mut() {
            let mut left_at = 0usize;
            let mut right_at = 0usize;
            for pos in lo..hi {
                let row = col[pos];
                if self.data.row(row as usize)[feature] <= threshold {
                    col[lo + left_at] = row;
                    left_at += 1;
                } else {
                    self.scratch[right_at] = row;
                    right_at += 1;
                }
            }
            col[lo + left_at..hi].copy_from_slice(&self.scratch[..right_at]);
            mid = lo + left_at;
        }

        let left_slot = tree.nodes.len();
        tree.nodes.push(Node::Leaf { label: 0 });
        let right_slot = tree.nodes.len();
        tree.nodes.push(Node::Leaf { label: 0 });
        tree.nodes[slot] = Node::Split {
            feature: feature as u32,
            threshold,
            left: left_slot as u32,
            right: right_slot as u32,
        };
        self.grow(tree, left_slot, cols, lo, mid, depth + 1, rng);
        self.grow(tree, right_slot, cols, mid, hi, depth + 1, rng);
    }
}

/// Builder for wide data: sorts the candidate column at each node.
struct SortingBuilder<'a> {
    data: &'a Dataset,
    params: &'a TreeParams,
    class_count: usize,
}

impl SortingBuilder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn grow(
        &mut self,
        tree: &mut DecisionTree,
        slot: usize,
        indices: &mut Vec<u32>,
        lo: usize,
        hi: usize,
        depth: usize,
        rng: &mut ChaCha8Rng,
    ) {
        let size = hi - lo;
        let counts = node_counts(self.data, &indices[lo..hi], self.class_count);
        if should_stop(&counts, size, depth, self.params) {
            tree.nodes[slot] = Node::Leaf { label: majority_label(&counts) };
            return;
        }
        let candidates = sample_features(self.data.d(), self.params.features_per_node, rng);
        let parent_gini = gini(&counts, size);
        let mut sorted: Vec<u32> = Vec::with_capacity(size);
        let split = pick_best(candidates.iter().map(|&f| {
            sorted.clear();
            sorted.extend_from_slice(&indices[lo..hi]);
            sorted.sort_by(|&a, &b| {
                self.data.row(a as usize)[f]
                    .total_cmp(&self.data.row(b as usize)[f])
                    .then(a.cmp(&b))
            });
            (
                f,
                best_threshold_for_feature(
                    self.data,
                    f,
                    &sorted,
                    &counts,
                    parent_gini,
                    self.params.min_leaf,
                    self.class_count,
                ),
            )
        }));
        let Some((feature, threshold)) = split else {
            tree.nodes[slot] = Node::Leaf { label: majority_label(&counts) };
            return;
        };

        let mut left_rows = Vec::with_capacity(size);
        let mut right_rows = Vec::with_capacity(size);
        for &i in &indices[lo..hi] {
            if self.data.row(i as usize)[feature] <= threshold {
                left_rows.push(i);
            } else {
                right_rows.push(i);
            }
        }
        let mid = lo + left_rows.len();
        indices[lo..mid].copy_from_slice(&left_rows);
        indices[mid..hi].copy_from_slice(&right_rows);

        let left_slot = tree.nodes.len();
        tree.nodes.push(Node::Leaf { label: 0 });
        let right_slot = tree.nodes.len();
        tree.nodes.push(Node::Leaf { label: 0 });
        tree.nodes[slot] = Node::Split {
            feature: feature as u32,
            threshold,
            left: left_slot as u32,
            right: right_slot as u32,
        };
        self.grow(tree, left_slot, indices, lo, mid, depth + 1, rng);
        self.grow(tree, right_slot, indices, mid, hi, depth + 1, rng);
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    let total = total as f64;
    let mut sum_sq = 0.0;
    for &c in counts {
        let p = c as f64 / total;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

pub(crate) fn majority_label(counts: &[usize]) -> u32 {
    let mut best = 0usize;
    for (label, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = label;
        }
    }
    best as u32
}

/// `m` distinct feature indices, ascending, via partial Fisher-Yates.
fn sample_features(d: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    if m >= d {
        return (0..d).collect();
    }
    use rand::Rng;
    let mut pool: Vec<usize> = (0..d).collect();
    for i in 0..m {
        let j = rng.random_range(i..d);
        pool.swap(i, j);
    }
    let mut picked = pool[..m].to_vec();
    picked.sort_unstable();
    picked
}
