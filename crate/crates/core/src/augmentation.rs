//! Uniform random corruptions inside Lp balls around data points.
//!
//! Sampling is stream-stable: each parent point owns a ChaCha sub-stream
//! keyed by (seed, parent index), so the first k1 samples of a parent are
//! identical between runs configured with k1 and k2 > k1 points per parent.
//! That lets k-convergence studies extend samples instead of resampling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distr::{Distribution, Uniform};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::separation::NormMetric;

/// Parameters for ball-noise augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationConfig {
    /// Ball radius in feature-space units.
    pub epsilon: f64,
    /// Augmented points per original point.
    pub k: usize,
    pub norm: NormMetric,
    /// Clamp sampled coordinates to `[0, 1]` (pixels yes, abstract features no).
    pub clip_to_unit: bool,
    pub seed: u64,
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Validation(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        if self.k == 0 {
            return Err(Error::Validation("k must be >= 1".into()));
        }
        Ok(())
    }
}

/// An augmented point set, n*k rows in parent-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Augmented {
    data: Dataset,
    parents: Vec<u32>,
    k: usize,
    config: AugmentationConfig,
}

impl Augmented {
    /// The augmented points as a dataset (labels copied from parents).
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn into_data(self) -> Dataset {
        self.data
    }

    /// Parent row index (into the source dataset) of each augmented row.
    pub fn parents(&self) -> &[u32] {
        &self.parents
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn config(&self) -> &AugmentationConfig {
        &self.config
    }

    /// Sample ordinal of augmented row `i` within its parent, starting at 1
    /// (ordinal 0 is reserved for the clean point in exports).
    pub fn ordinal(&self, i: usize) -> u32 {
        (i % self.k) as u32 + 1
    }
}

/// Draws one point uniformly from the `norm`-ball of radius `epsilon`
/// around `center`.
///
/// Linf: every coordinate independently uniform on [c - eps, c + eps].
/// L2: isotropic direction scaled by eps * U^(1/d), U uniform on (0, 1].
pub fn sample_ball(center: &[f64], epsilon: f64, norm: NormMetric, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if epsilon == 0.0 {
        return center.to_vec();
    }
    let d = center.len();
    match norm {
        NormMetric::Linf => {
            let jitter = Uniform::new_inclusive(-epsilon, epsilon).unwrap();
            center.iter().map(|c| c + jitter.sample(rng)).collect()
        }
        NormMetric::L2 => {
            let mut direction = vec![0.0f64; d];
            loop {
                let mut norm_sq = 0.0;
                for g in direction.iter_mut() {
                    *g = rng.sample(StandardNormal);
                    norm_sq += *g * *g;
                }
                if norm_sq > 0.0 {
                    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
                    let radius = epsilon * u.powf(1.0 / d as f64);
                    let scale = radius / norm_sq.sqrt();
                    let mut point: Vec<f64> =
                        center.iter().zip(&direction).map(|(c, g)| c + g * scale).collect();
                    // A couple of ulps of rounding can push the point just
                    // outside the ball; pull it back onto the radius.
                    while norm.distance(&point, center) > epsilon {
                        let dist = norm.distance(&point, center);
                        let shrink = epsilon / dist;
                        for (p, c) in point.iter_mut().zip(center) {
                            *p = c + (*p - c) * shrink;
                        }
                    }
                    return point;
                }
            }
        }
    }
}

/// Generates `config.k` uniform ball corruptions around every point.
///
/// Deterministic under `config.seed`; parent index recorded per row; labels
/// copied from parents. With `clip_to_unit`, coordinates are clamped to
/// `[0, 1]` after sampling (clamping toward the box never increases the
/// distance to an in-box center, so containment survives).
pub fn augment(dataset: &Dataset, config: &AugmentationConfig) -> Result<Augmented> {
    config.validate()?;
    let n = dataset.n();
    let d = dataset.d();
    let k = config.k;
    let base = ChaCha8Rng::seed_from_u64(config.seed);

    let mut features = vec![0.0f64; n * k * d];
    let mut labels = vec![0u32; n * k];
    let mut parents = vec![0u32; n * k];

    features
        .par_chunks_mut(k * d)
        .zip(labels.par_chunks_mut(k))
        .zip(parents.par_chunks_mut(k))
        .enumerate()
        .for_each(|(parent, ((feat_chunk, label_chunk), parent_chunk))| {
            let mut rng = base.clone();
            rng.set_stream(parent as u64);
            let center = dataset.row(parent);
            let label = dataset.label(parent);
            for s in 0..k {
                let mut point = sample_ball(center, config.epsilon, config.norm, &mut rng);
                if config.clip_to_unit {
                    for v in point.iter_mut() {
                        *v = v.clamp(0.0, 1.0);
                    }
                }
                feat_chunk[s * d..(s + 1) * d].copy_from_slice(&point);
                label_chunk[s] = label;
                parent_chunk[s] = parent as u32;
            }
        });

    let data = Dataset::new(
        features,
        d,
        labels,
        dataset.class_count(),
        format!("{}-aug-e{}", dataset.name(), config.epsilon),
    )?;
    Ok(Augmented {
        data,
        parents,
        k,
        config: *config,
    })
}

/// Exports an augmented set as CSV with columns
/// `parent_index,label,f0,...`, rows in (parent, ordinal) order.
///
/// With `include_clean`, each parent's clean point is written first as
/// sample ordinal 0, followed by its k corruptions as ordinals 1..=k; this
/// is the layout external prediction files are joined against.
pub fn write_augmented_csv(
    source: &Dataset,
    augmented: &Augmented,
    path: impl AsRef<Path>,
    include_clean: bool,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);

    write!(w, "parent_index,label").map_err(io_err)?;
    for c in 0..source.d() {
        write!(w, ",f{c}").map_err(io_err)?;
    }
    writeln!(w).map_err(io_err)?;

    let k = augmented.k();
    for parent in 0..source.n() {
        if include_clean {
            write!(w, "{},{}", parent, source.label(parent)).map_err(io_err)?;
            for v in source.row(parent) {
                write!(w, ",{v}").map_err(io_err)?;
            }
            writeln!(w).map_err(io_err)?;
        }
        for s in 0..k {
            let row = parent * k + s;
            write!(w, "{},{}", parent, augmented.data().label(row)).map_err(io_err)?;
            for v in augmented.data().row(row) {
                write!(w, ",{v}").map_err(io_err)?;
            }
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_2d, SynthKind};

    fn config(epsilon: f64, k: usize, norm: NormMetric, seed: u64) -> AugmentationConfig {
        AugmentationConfig {
            epsilon,
            k,
            norm,
            clip_to_unit: false,
            seed,
        }
    }

    #[test]
    fn zero_epsilon_returns_centers_exactly() {
        let ds = synth_2d(SynthKind::Blobs, 10, 0.3, 2).unwrap();
        let aug = augment(&ds, &config(0.0, 3, NormMetric::L2, 9)).unwrap();
        for i in 0..aug.data().n() {
            let parent = aug.parents()[i] as usize;
            assert_eq!(aug.data().row(i), ds.row(parent));
        }
    }

    #[test]
    fn counts_labels_and_parents_line_up() {
        let ds = synth_2d(SynthKind::Blobs, 5, 0.1, 4).unwrap();
        let aug = augment(&ds, &config(0.05, 10, NormMetric::Linf, 1)).unwrap();
        assert_eq!(aug.data().n(), 50);
        for i in 0..50 {
            let parent = aug.parents()[i] as usize;
            assert_eq!(i / 10, parent);
            assert_eq!(aug.data().label(i), ds.label(parent));
            assert_eq!(aug.ordinal(i), (i % 10) as u32 + 1);
        }
    }

    #[test]
    fn containment_holds_for_both_norms() {
        let ds = synth_2d(SynthKind::TwoMoons, 40, 0.05, 8).unwrap();
        for norm in [NormMetric::Linf, NormMetric::L2] {
            let cfg = config(0.07, 6, norm, 3);
            let aug = augment(&ds, &cfg).unwrap();
            for i in 0..aug.data().n() {
                let parent = aug.parents()[i] as usize;
                let dist = norm.distance(aug.data().row(i), ds.row(parent));
                assert!(dist <= cfg.epsilon, "{norm}: {dist} > {}", cfg.epsilon);
            }
        }
    }

    #[test]
    fn containment_survives_clipping() {
        let ds = synth_2d(SynthKind::Rings, 30, 0.0, 1).unwrap();
        for norm in [NormMetric::Linf, NormMetric::L2] {
            let cfg = AugmentationConfig {
                epsilon: 0.2,
                k: 8,
                norm,
                clip_to_unit: true,
                seed: 5,
            };
            let aug = augment(&ds, &cfg).unwrap();
            assert!(aug.data().is_unit_interval());
            for i in 0..aug.data().n() {
                let parent = aug.parents()[i] as usize;
                assert!(norm.distance(aug.data().row(i), ds.row(parent)) <= cfg.epsilon);
            }
        }
    }

    #[test]
    fn same_seed_is_identical() {
        let ds = synth_2d(SynthKind::Blobs, 20, 0.2, 6).unwrap();
        let cfg = config(0.03, 4, NormMetric::L2, 11);
        assert_eq!(augment(&ds, &cfg).unwrap(), augment(&ds, &cfg).unwrap());
    }

    #[test]
    fn samples_are_stream_stable_in_k() {
        let ds = synth_2d(SynthKind::TwoMoons, 15, 0.04, 3).unwrap();
        for norm in [NormMetric::Linf, NormMetric::L2] {
            let small = augment(&ds, &config(0.02, 3, norm, 42)).unwrap();
            let large = augment(&ds, &config(0.02, 7, norm, 42)).unwrap();
            for parent in 0..ds.n() {
                for s in 0..3 {
                    assert_eq!(
                        small.data().row(parent * 3 + s),
                        large.data().row(parent * 7 + s),
                        "parent {parent} sample {s} differs between k=3 and k=7"
                    );
                }
            }
        }
    }

    #[test]
    fn linf_per_coordinate_mean_displacement_is_half_epsilon() {
        let ds = Dataset::new(vec![0.5, 0.5], 2, vec![0], 2, "c").unwrap();
        let eps = 0.1;
        let aug = augment(&ds, &config(eps, 100_000, NormMetric::Linf, 7)).unwrap();
        let mut sums = [0.0f64; 2];
        for i in 0..aug.data().n() {
            let row = aug.data().row(i);
            sums[0] += (row[0] - 0.5).abs();
            sums[1] += (row[1] - 0.5).abs();
        }
        for s in sums {
            let mean = s / aug.data().n() as f64;
            assert!((mean - eps / 2.0).abs() < 0.001, "mean |delta| = {mean}");
        }
    }

    #[test]
    fn l2_mean_radius_matches_uniform_ball_expectation() {
        // E||x|| = eps * d / (d + 1) for the uniform d-ball
        let ds = Dataset::new(vec![0.0, 0.0, 0.0], 3, vec![0], 2, "c").unwrap();
        let aug = augment(&ds, &config(1.0, 100_000, NormMetric::L2, 13)).unwrap();
        let mean: f64 = (0..aug.data().n())
            .map(|i| NormMetric::L2.distance(aug.data().row(i), &[0.0, 0.0, 0.0]))
            .sum::<f64>()
            / aug.data().n() as f64;
        assert!((mean - 0.75).abs() < 0.01, "mean radius = {mean}");
    }
}
