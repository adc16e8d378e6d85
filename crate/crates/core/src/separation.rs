//! Minimal class separation: the exact smallest distance between any two
//! points of different classes (2r), and epsilon_min = r.
//!
//! Two routes compute the same quantity: a brute-force oracle that scans
//! every inter-class pair, and an optimized search that partitions points
//! by class, walks cache-sized tile pairs in parallel and abandons a pair
//! as soon as its partial distance exceeds the best seen so far. Both
//! return bit-identical distances and resolve ties on the witness pair by
//! the lexicographically smallest (i, j).

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Distance metric on the feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMetric {
    /// Chebyshev distance: max coordinate gap.
    Linf,
    /// Euclidean distance.
    L2,
}

impl NormMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            NormMetric::Linf => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
            NormMetric::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// Comparison key: the raw distance for Linf, its square for L2.
    /// Monotone in the distance, cheaper to accumulate.
    fn key(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            NormMetric::Linf => self.distance(a, b),
            NormMetric::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        }
    }

    fn key_to_distance(self, key: f64) -> f64 {
        match self {
            NormMetric::Linf => key,
            NormMetric::L2 => key.sqrt(),
        }
    }

    pub fn parse(s: &str) -> Result<NormMetric> {
        match s.to_ascii_lowercase().as_str() {
            "linf" | "l_inf" | "inf" | "chebyshev" => Ok(NormMetric::Linf),
            "l2" | "euclidean" => Ok(NormMetric::L2),
            other => Err(Error::Validation(format!(
                "unknown norm {other:?} (expected linf or l2)"
            ))),
        }
    }
}

impl std::fmt::Display for NormMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NormMetric::Linf => write!(f, "linf"),
            NormMetric::L2 => write!(f, "l2"),
        }
    }
}

/// Result of a minimal class-separation search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    /// Minimal inter-class distance (2r).
    pub two_r: f64,
    /// Half of `two_r`: the corner-case corruption radius.
    pub epsilon_min: f64,
    /// Point indices achieving `two_r`; labels differ; `witness.0 < witness.1`.
    pub witness: (usize, usize),
    pub norm: NormMetric,
    /// Inter-class pairs whose distance was fully evaluated.
    pub pairs_examined: u64,
    /// Inter-class pairs abandoned early by the bound.
    pub pairs_pruned: u64,
}

impl SeparationResult {
    /// Identical points with different labels: separation collapsed to 0.
    pub fn is_degenerate(&self) -> bool {
        self.two_r == 0.0
    }
}

fn check_two_classes(dataset: &Dataset) -> Result<()> {
    if dataset.distinct_labels() < 2 {
        return Err(Error::UndefinedSeparation);
    }
    Ok(())
}

fn finish(norm: NormMetric, key: f64, witness: (usize, usize), examined: u64, pruned: u64) -> SeparationResult {
    let two_r = norm.key_to_distance(key);
    if two_r == 0.0 {
        log::warn!(
            "degenerate separation: points {} and {} coincide but carry different labels",
            witness.0,
            witness.1
        );
    }
    SeparationResult {
        two_r,
        epsilon_min: two_r / 2.0,
        witness,
        norm,
        pairs_examined: examined,
        pairs_pruned: pruned,
    }
}

/// Brute-force oracle: evaluates every inter-class pair.
///
/// Ground truth for the optimized search; single-threaded, no pruning.
/// Ties resolve to the lexicographically smallest (i, j).
pub fn min_class_separation_oracle(dataset: &Dataset, norm: NormMetric) -> Result<SeparationResult> {
    check_two_classes(dataset)?;
    let n = dataset.n();
    let labels = dataset.labels();
    let mut best_key = f64::INFINITY;
    let mut witness = (0usize, 0usize);
    let mut examined = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] {
                continue;
            }
            examined += 1;
            let key = norm.key(dataset.row(i), dataset.row(j));
            if key < best_key {
                best_key = key;
                witness = (i, j);
            }
        }
    }
    Ok(finish(norm, best_key, witness, examined, 0))
}

/// Shared running best for the parallel search.
///
/// `key_bits` is a monotone upper bound on the best key, readable without a
/// lock (non-negative f64 bit patterns order like the values). The witness
/// and the authoritative key live behind the mutex; every pair that might
/// win re-checks there.
struct SharedBest {
    key_bits: AtomicU64,
    state: Mutex<(f64, usize, usize)>,
}

impl SharedBest {
    fn new() -> Self {
        SharedBest {
            key_bits: AtomicU64::new(f64::INFINITY.to_bits()),
            state: Mutex::new((f64::INFINITY, 0, 0)),
        }
    }

    fn bound(&self) -> f64 {
        f64::from_bits(self.key_bits.load(Ordering::Relaxed))
    }

    /// Installs `(key, i, j)` if it is smaller in (key, i, j) order.
    fn offer(&self, key: f64, i: usize, j: usize) {
        let mut state = self.state.lock().unwrap();
        let (bk, bi, bj) = *state;
        if key < bk || (key == bk && (i, j) < (bi, bj)) {
            *state = (key, i, j);
            self.key_bits.store(key.to_bits(), Ordering::Release);
        }
    }
}

const TILE: usize = 32;

/// Optimized minimal class separation.
///
/// Same contract as [`min_class_separation_oracle`]: identical `two_r` and
/// `epsilon_min` for every input, witness ties resolved lexicographically.
/// Partitions points by class, iterates tile pairs of distinct classes in
/// parallel and abandons a pair once its partial distance strictly exceeds
/// the shared bound. Pairs that tie with the bound are evaluated in full so
/// the witness tie-break sees them; the bound itself only decreases, so the
/// result does not depend on scheduling. `threads` = 0 uses the current
/// rayon pool as-is; any other value runs the search in a dedicated pool.
pub fn min_class_separation(
    dataset: &Dataset,
    norm: NormMetric,
    threads: usize,
) -> Result<SeparationResult> {
    check_two_classes(dataset)?;
    if threads == 0 {
        return Ok(search(dataset, norm));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Validation(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(|| search(dataset, norm)))
}

fn search(dataset: &Dataset, norm: NormMetric) -> SeparationResult {
    let n = dataset.n();
    let labels = dataset.labels();

    // Partition row indices by class, ascending within each class.
    let mut by_class: Vec<Vec<u32>> = vec![Vec::new(); dataset.class_count()];
    for i in 0..n {
        by_class[labels[i] as usize].push(i as u32);
    }
    by_class.retain(|v| !v.is_empty());

    // All tile pairs across distinct classes.
    let mut jobs: Vec<(usize, usize, usize, usize)> = Vec::new();
    for a in 0..by_class.len() {
        for b in (a + 1)..by_class.len() {
            let (na, nb) = (by_class[a].len(), by_class[b].len());
            let mut ta = 0;
            while ta < na {
                let mut tb = 0;
                while tb < nb {
                    jobs.push((a, ta, b, tb));
                    tb += TILE;
                }
                ta += TILE;
            }
        }
    }

    let best = SharedBest::new();
    let examined = AtomicU64::new(0);
    let pruned = AtomicU64::new(0);

    jobs.par_iter().for_each(|&(a, ta, b, tb)| {
        let rows_a = &by_class[a][ta..(ta + TILE).min(by_class[a].len())];
        let rows_b = &by_class[b][tb..(tb + TILE).min(by_class[b].len())];
        let mut local_examined = 0u64;
        let mut local_pruned = 0u64;
        for &ia in rows_a {
            let pa = dataset.row(ia as usize);
            for &ib in rows_b {
                let pb = dataset.row(ib as usize);
                let bound = best.bound();
                match partial_key(norm, pa, pb, bound) {
                    Some(key) => {
                        local_examined += 1;
                        if key <= bound {
                            let (i, j) = if ia < ib { (ia, ib) } else { (ib, ia) };
                            best.offer(key, i as usize, j as usize);
                        }
                    }
                    None => local_pruned += 1,
                }
            }
        }
        examined.fetch_add(local_examined, Ordering::Relaxed);
        pruned.fetch_add(local_pruned, Ordering::Relaxed);
    });

    let (key, i, j) = *best.state.lock().unwrap();
    finish(
        norm,
        key,
        (i, j),
        examined.load(Ordering::Relaxed),
        pruned.load(Ordering::Relaxed),
    )
}

/// Accumulates the comparison key coordinate by coordinate; returns `None`
/// as soon as it strictly exceeds `bound` (the pair cannot win or tie).
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

/// Minimal distance from `point_index` to any point of a different class.
///
/// The minimum of this value over all points equals `two_r`.
pub fn per_point_margin(dataset: &Dataset, norm: NormMetric, point_index: usize) -> Result<f64> {
    check_two_classes(dataset)?;
    if point_index >= dataset.n() {
        return Err(Error::Validation(format!(
            "point index {point_index} out of bounds (n = {})",
            dataset.n()
        )));
    }
    let own = dataset.label(point_index);
    let p = dataset.row(point_index);
    let mut best = f64::INFINITY;
    for j in 0..dataset.n() {
        if dataset.label(j) == own {
            continue;
        }
        if let Some(key) = partial_key(norm, p, dataset.row(j), best) {
            if key < best {
                best = key;
            }
        }
    }
    Ok(norm.key_to_distance(best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{synth_2d, SynthKind};

    fn two_points() -> Dataset {
        Dataset::new(vec![0.0, 0.0, 0.1, 0.0], 2, vec![0, 1], 2, "pair").unwrap()
    }

    #[test]
    fn oracle_two_point_l2() {
        let r = min_class_separation_oracle(&two_points(), NormMetric::L2).unwrap();
        assert!((r.two_r - 0.1).abs() < 1e-15);
        assert!((r.epsilon_min - 0.05).abs() < 1e-15);
        assert_eq!(r.witness, (0, 1));
    }

    #[test]
    fn oracle_linf_takes_max_coordinate_gap() {
        let ds = Dataset::new(vec![0.0, 0.0, 0.3, 0.4], 2, vec![0, 1], 2, "pair").unwrap();
        let r = min_class_separation_oracle(&ds, NormMetric::Linf).unwrap();
        assert_eq!(r.two_r, 0.4);
    }

    #[test]
    fn duplicate_points_different_labels_give_zero() {
        let ds = Dataset::new(
            vec![0.5, 0.5, 0.5, 0.5, 0.9, 0.9],
            2,
            vec![0, 1, 0],
            2,
            "dup",
        )
        .unwrap();
        for f in [min_class_separation_oracle, |d: &Dataset, n| min_class_separation(d, n, 0)] {
            let r = f(&ds, NormMetric::L2).unwrap();
            assert_eq!(r.two_r, 0.0);
            assert!(r.is_degenerate());
            assert_eq!(r.witness, (0, 1));
        }
    }

    #[test]
    fn single_class_is_undefined() {
        let ds = Dataset::new(vec![0.0, 0.0, 1.0, 1.0], 2, vec![0, 0], 2, "one").unwrap();
        assert!(matches!(
            min_class_separation_oracle(&ds, NormMetric::L2),
            Err(Error::UndefinedSeparation)
        ));
        assert!(matches!(
            min_class_separation(&ds, NormMetric::Linf, 0),
            Err(Error::UndefinedSeparation)
        ));
    }

    #[test]
    fn optimized_matches_oracle_on_synth_data() {
        let ds = synth_2d(SynthKind::TwoMoons, 300, 0.06, 11).unwrap();
        for norm in [NormMetric::Linf, NormMetric::L2] {
            let oracle = min_class_separation_oracle(&ds, norm).unwrap();
            let fast = min_class_separation(&ds, norm, 0).unwrap();
            assert_eq!(oracle.two_r.to_bits(), fast.two_r.to_bits());
            assert_eq!(oracle.epsilon_min.to_bits(), fast.epsilon_min.to_bits());
            assert_eq!(oracle.witness, fast.witness);
        }
    }

    #[test]
    fn pruning_counts_cover_all_inter_class_pairs() {
        let ds = synth_2d(SynthKind::Rings, 251, 0.04, 3).unwrap();
        let total: u64 = {
            let n0 = ds.labels().iter().filter(|&&l| l == 0).count() as u64;
            let n1 = ds.n() as u64 - n0;
            n0 * n1
        };
        let r = min_class_separation(&ds, NormMetric::Linf, 0).unwrap();
        assert_eq!(r.pairs_examined + r.pairs_pruned, total);
        let o = min_class_separation_oracle(&ds, NormMetric::Linf).unwrap();
        assert_eq!(o.pairs_examined, total);
        assert_eq!(o.pairs_pruned, 0);
    }

    #[test]
    fn thread_count_does_not_change_the_minimum() {
        let ds = synth_2d(SynthKind::TwoMoons, 400, 0.05, 5).unwrap();
        let r1 = min_class_separation(&ds, NormMetric::L2, 1).unwrap();
        let r4 = min_class_separation(&ds, NormMetric::L2, 4).unwrap();
        assert_eq!(r1.two_r.to_bits(), r4.two_r.to_bits());
        assert_eq!(r1.witness, r4.witness);
    }

    #[test]
    fn margin_of_each_point_bounds_two_r() {
        let ds = synth_2d(SynthKind::Blobs, 60, 0.2, 13).unwrap();
        let sep = min_class_separation(&ds, NormMetric::L2, 0).unwrap();
        let mut min_margin = f64::INFINITY;
        for i in 0..ds.n() {
            let m = per_point_margin(&ds, NormMetric::L2, i).unwrap();
            assert!(m >= sep.two_r);
            min_margin = min_margin.min(m);
        }
        assert_eq!(min_margin.to_bits(), sep.two_r.to_bits());
    }

    #[test]
    fn two_point_margin_is_symmetric() {
        let ds = two_points();
        let m0 = per_point_margin(&ds, NormMetric::L2, 0).unwrap();
        let m1 = per_point_margin(&ds, NormMetric::L2, 1).unwrap();
        assert!((m0 - 0.1).abs() < 1e-15);
        assert_eq!(m0, m1);
    }
}
