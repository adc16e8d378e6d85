//! Loader-to-separation path exercised on synthetic CIFAR-format batches
//! with a planted minimum, at the format's true record size and
//! dimensionality.

use std::io::Write;
use std::path::Path;

use mscr_core::*;

const DIM: usize = 3072;
const RECORDS: usize = 10_000;

/// Writes one batch: record i gets `label(i)` and constant pixel `fill(i)`.
fn write_batch(
    dir: &Path,
    name: &str,
    label: impl Fn(usize) -> u8,
    fill: impl Fn(usize) -> u8,
) {
    let mut bytes = Vec::with_capacity((DIM + 1) * RECORDS);
    for i in 0..RECORDS {
        bytes.push(label(i));
        bytes.extend(std::iter::repeat(fill(i)).take(DIM));
    }
    let mut f = std::fs::File::create(dir.join(name)).unwrap();
    f.write_all(&bytes).unwrap();
}

#[test]
fn planted_linf_minimum_of_54_over_255_is_recovered_exactly() {
    let dir = tempfile::tempdir().unwrap();
    // class 0: all pixels 0, except record 100 at pixel level 146
    // class 1: all pixels 200
    // minimal inter-class Linf distance: |200 - 146| = 54 grades
    write_batch(
        dir.path(),
        "test_batch.bin",
        |i| (i % 2) as u8,
        |i| match (i % 2, i) {
            (0, 100) => 146,
            (0, _) => 0,
            _ => 200,
        },
    );
    let data = load_cifar10_binary(dir.path(), CifarInclude::Test).unwrap();
    assert_eq!(data.n(), RECORDS);
    assert_eq!(data.d(), DIM);

    let result = min_class_separation(&data, NormMetric::Linf, 2).unwrap();
    assert!((result.two_r - 54.0 / 255.0).abs() < 1e-9);
    assert!((result.epsilon_min - 27.0 / 255.0).abs() < 1e-9);
    assert_eq!(result.witness, (1, 100)); // lex-smallest among all ties
    assert_eq!(
        result.pairs_examined + result.pairs_pruned,
        (RECORDS as u64 / 2) * (RECORDS as u64 / 2)
    );
    // pixel distances are exact multiples of 1/255 in f64
    assert_eq!(result.two_r, 200.0 / 255.0 - 146.0 / 255.0);
}

#[test]
fn margin_of_the_planted_record_matches_the_search() {
    let dir = tempfile::tempdir().unwrap();
    write_batch(
        dir.path(),
        "test_batch.bin",
        |i| (i % 2) as u8,
        |i| match (i % 2, i) {
            (0, 100) => 146,
            (0, _) => 0,
            _ => 200,
        },
    );
    let data = load_cifar10_binary(dir.path(), CifarInclude::Test).unwrap();
    let margin = per_point_margin(&data, NormMetric::Linf, 100).unwrap();
    assert!((margin - 54.0 / 255.0).abs() < 1e-9);
}
