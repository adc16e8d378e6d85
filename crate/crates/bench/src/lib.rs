//! Shared data generation for the benchmark targets.

use mscr_core::{synth_2d, Dataset, SynthKind};

/// Deterministic dataset of `n` points in `d` dimensions with `classes`
/// labels; class clouds overlap enough that pruning has real work to do.
pub fn random_dataset(n: usize, d: usize, classes: usize, seed: u64) -> Dataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % classes) as u32;
        let center = (label as f64 + 1.0) / (classes as f64 + 1.0);
        for _ in 0..d {
            features.push((center + 0.3 * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0));
        }
        labels.push(label);
    }
    Dataset::new(features, d, labels, classes, format!("bench-{n}x{d}")).unwrap()
}

/// Standard 2D benchmark dataset (uniform-thickness rings).
pub fn rings(n: usize) -> Dataset {
    synth_2d(SynthKind::Rings, n, 0.2, 42).unwrap()
}
