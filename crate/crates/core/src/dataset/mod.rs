//! Datasets: loading, validation, normalization, splitting and synthesis.
//!
//! A [`Dataset`] is an immutable n x d feature matrix on the unit interval
//! with dense integer class labels. All loaders normalize features into
//! [0, 1] (min-max per coordinate for CSV and synthetic data, byte/255 for
//! CIFAR-10) so that corruption radii are comparable across datasets.

mod cifar;
mod csv_io;
mod synth;

pub use cifar::{load_cifar10_binary, CifarInclude};
pub use csv_io::{load_csv, write_csv, LabelColumn};
pub use synth::{synth_2d, SynthKind};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mix_seed, role, stream_rng};

/// Immutable classification dataset with features on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n: usize,
    d: usize,
    labels: Vec<u32>,
    class_count: usize,
    name: String,
    /// Per-column (min, max) observed before min-max normalization, when one
    /// was applied. `None` for fixed-scale loaders such as CIFAR-10.
    column_ranges: Option<Vec<(f64, f64)>>,
    /// Original label names in dense-id order, when labels came from text.
    label_names: Option<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from row-major features.
    ///
    /// Validates shape, label range and feature finiteness. Does not require
    /// two distinct classes: operations for which single-class data is
    /// undefined (separation) reject it themselves.
    pub fn new(
        features: Vec<f64>,
        d: usize,
        labels: Vec<u32>,
        class_count: usize,
        name: impl Into<String>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::Validation("dataset must have at least one feature".into()));
        }
        if labels.is_empty() {
            return Err(Error::EmptyInput("dataset has no rows".into()));
        }
        if features.len() != labels.len() * d {
            return Err(Error::Validation(format!(
                "feature buffer holds {} values, expected {} rows x {} columns",
                features.len(),
                labels.len(),
                d
            )));
        }
        if class_count == 0 {
            return Err(Error::Validation("class_count must be positive".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= class_count) {
            return Err(Error::Validation(format!(
                "label {bad} out of range [0, {class_count})"
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite feature value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        let n = labels.len();
        Ok(Dataset {
            features,
            n,
            d,
            labels,
            class_count,
            name: name.into(),
            column_ranges: None,
            label_names: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> u32 {
        self.labels[i]
    }

    /// Feature row `i` as a contiguous slice of length `d`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.d..(i + 1) * self.d]
    }

    /// The whole row-major feature buffer.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn column_ranges(&self) -> Option<&[(f64, f64)]> {
        self.column_ranges.as_deref()
    }

    pub fn label_names(&self) -> Option<&[String]> {
        self.label_names.as_deref()
    }

    /// Human-readable name of label `id` (falls back to the dense id).
    pub fn label_name(&self, id: u32) -> String {
        match &self.label_names {
            Some(names) => names[id as usize].clone(),
            None => id.to_string(),
        }
    }

    /// Number of distinct labels actually present.
    pub fn distinct_labels(&self) -> usize {
        let mut seen = vec![false; self.class_count];
        let mut count = 0;
        for &l in &self.labels {
            if !seen[l as usize] {
                seen[l as usize] = true;
                count += 1;
            }
        }
        count
    }

    /// True when every feature lies in `[0, 1]`.
    pub fn is_unit_interval(&self) -> bool {
        self.features.iter().all(|&v| (0.0..=1.0).contains(&v))
    }

    /// Min-max normalizes each column in place and records the ranges.
    /// Zero-range columns map to 0.0. Idempotent.
    pub fn normalize_minmax(&mut self) {
        let mut ranges = Vec::with_capacity(self.d);
        for c in 0..self.d {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in 0..self.n {
                let v = self.features[r * self.d + c];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            ranges.push((lo, hi));
            let span = hi - lo;
            for r in 0..self.n {
                let v = &mut self.features[r * self.d + c];
                *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
            }
        }
        self.column_ranges = Some(ranges);
    }

    /// New dataset with this one's rows followed by `other`'s.
    ///
    /// Dimensions must match; the class universe is the larger of the two.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.d != other.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: other.d,
            });
        }
        let mut features = Vec::with_capacity((self.n + other.n) * self.d);
        features.extend_from_slice(&self.features);
        features.extend_from_slice(&other.features);
        let mut labels = Vec::with_capacity(self.n + other.n);
        labels.extend_from_slice(&self.labels);
        labels.extend_from_slice(&other.labels);
        let mut out = Dataset::new(
            features,
            self.d,
            labels,
            self.class_count.max(other.class_count),
            format!("{}+{}", self.name, other.name),
        )?;
        out.label_names = self.label_names.clone();
        Ok(out)
    }

    /// Sub-dataset at the given row indices (in the order given).
    pub fn select(&self, indices: &[usize], name: impl Into<String>) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.d);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.n {
                return Err(Error::Validation(format!("row index {i} out of bounds")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        let mut out = Dataset::new(features, self.d, labels, self.class_count, name)?;
        out.column_ranges = self.column_ranges.clone();
        out.label_names = self.label_names.clone();
        Ok(out)
    }

    /// SHA-256 over shape, features and labels; identifies the exact data.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        h.update((self.d as u64).to_le_bytes());
        h.update((self.class_count as u64).to_le_bytes());
        for v in &self.features {
            h.update(v.to_le_bytes());
        }
        for l in &self.labels {
            h.update(l.to_le_bytes());
        }
        let digest = h.finalize();
        let mut out = String::with_capacity(64);
        for b in digest {
            out.push_str(&format!("{b:02x}"));
        }
        out
    }

    pub(crate) fn set_label_names(&mut self, names: Option<Vec<String>>) {
        self.label_names = names;
    }
}

/// How to partition a dataset into train and test parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fraction of rows assigned to the test partition, in (0, 1).
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Validation(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.25,
            seed: 0,
            stratified: true,
        }
    }
}

/// Splits into disjoint, covering (train, test) partitions.
///
/// Reproducible under `spec.seed`. Stratified mode keeps per-class
/// proportions within rounding; when any class has a single member it falls
/// back to an unstratified split with a warning.
pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    spec.validate()?;
    let n = dataset.n();
    let n_test = ((n as f64) * spec.test_fraction).round() as usize;
    let n_test = n_test.clamp(1, n.saturating_sub(1));
    if n < 2 {
        return Err(Error::Validation(
            "cannot split a dataset with fewer than 2 rows".into(),
        ));
    }

    let stratified = if spec.stratified {
        let mut counts = vec![0usize; dataset.class_count()];
        for &l in dataset.labels() {
            counts[l as usize] += 1;
        }
        let ok = counts.iter().all(|&c| c != 1);
        if !ok {
            log::warn!(
                "stratified split impossible (a class has a single member); falling back to unstratified"
            );
        }
        ok
    } else {
        false
    };

    let mut test_indices: Vec<usize> = if stratified {
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.class_count()];
        for (i, &l) in dataset.labels().iter().enumerate() {
            by_class[l as usize].push(i);
        }
        let mut picked = Vec::with_capacity(n_test);
        for (c, members) in by_class.iter_mut().enumerate() {
            if members.is_empty() {
                continue;
            }
            let take = ((members.len() as f64) * spec.test_fraction).round() as usize;
            let take = take.min(members.len().saturating_sub(1));
            shuffle(members, mix_seed(spec.seed, &[role::SPLIT, c as u64]));
            picked.extend_from_slice(&members[..take]);
        }
        picked
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        shuffle(&mut all, mix_seed(spec.seed, &[role::SPLIT]));
        all[..n_test].to_vec()
    };

    test_indices.sort_unstable();
    let mut in_test = vec![false; n];
    for &i in &test_indices {
        in_test[i] = true;
    }
    let train_indices: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
    if train_indices.is_empty() || test_indices.is_empty() {
        return Err(Error::Validation(
            "split produced an empty partition; adjust test_fraction".into(),
        ));
    }

    let train = dataset.select(&train_indices, format!("{}-train", dataset.name()))?;
    let test = dataset.select(&test_indices, format!("{}-test", dataset.name()))?;
    Ok((train, test))
}

fn shuffle(indices: &mut [usize], seed: u64) {
    use rand::seq::SliceRandom;
    let mut rng = stream_rng(seed, &[]);
    indices.shuffle(&mut rng);
}
