//! Cross-module integration: determinism, per-run consistency, baseline
//! equivalence, run extension, and the 1NN robustness geometry.

use mscr_core::*;

fn small_plan(runs: usize, k_train: usize) -> ExperimentPlan {
    ExperimentPlan {
        dataset: DatasetSource::Synth {
            kind: SynthKind::Rings,
            n: 240,
            noise: 0.15,
            seed: 5,
        },
        split: SplitSpec {
            test_fraction: 0.25,
            seed: 0,
            stratified: true,
        },
        norm: NormMetric::Linf,
        eps_train_grid: vec![0.0, 0.01],
        eps_test_grid: vec![0.0, 0.01],
        include_eps_min: true,
        k_train,
        k_test: 3,
        runs,
        clip_to_unit: false,
        model_specs: vec![
            ModelSpec::knn(),
            ModelSpec {
                rf_trees: 10,
                ..ModelSpec::random_forest()
            },
        ],
        master_seed: 77,
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn experiment_is_bit_identical_across_runs_and_thread_counts() {
    let plan = small_plan(4, 2);
    let a = in_pool(1, || run_experiment(&plan).unwrap());
    let b = in_pool(4, || run_experiment(&plan).unwrap());
    let c = in_pool(4, || run_experiment(&plan).unwrap());
    let json = |m: &AccuracyMatrix| serde_json::to_string(m).unwrap();
    assert_eq!(json(&a), json(&b));
    assert_eq!(json(&b), json(&c));
}

#[test]
fn per_run_mscr_matches_recomputed_ratio() {
    let matrix = run_experiment(&small_plan(3, 2)).unwrap();
    let em = matrix.epsilon_min.unwrap();
    assert!(em > 0.0);
    for record in &matrix.records {
        let at_min = record.robust_at(em).expect("eps_min tested");
        let expect = (at_min - record.acc_clean) / record.acc_clean;
        let got = record.mscr.unwrap();
        assert!(
            (got - expect).abs() < 1e-12,
            "run {} model {}: {got} vs {expect}",
            record.run_index,
            record.model_id
        );
    }
}

#[test]
fn summaries_average_per_run_mscr_not_mscr_of_averages() {
    let matrix = run_experiment(&small_plan(5, 2)).unwrap();
    for cell in &matrix.cells {
        let records = matrix.records_for(&cell.model_id, cell.eps_train);
        let mean: f64 =
            records.iter().map(|r| r.mscr.unwrap()).sum::<f64>() / records.len() as f64;
        assert!((cell.mscr.unwrap().mean - mean).abs() < 1e-15);
    }
}

#[test]
fn baseline_column_ignores_k_train() {
    // eps_train = 0 must not touch augmentation at all
    let a = run_experiment(&small_plan(3, 2)).unwrap();
    let b = run_experiment(&small_plan(3, 9)).unwrap();
    for model_id in &a.model_ids {
        let ca = a.cell(model_id, 0.0).unwrap();
        let cb = b.cell(model_id, 0.0).unwrap();
        assert_eq!(
            serde_json::to_string(ca).unwrap(),
            serde_json::to_string(cb).unwrap()
        );
    }
}

#[test]
fn longer_experiments_extend_shorter_ones() {
    let short = run_experiment(&small_plan(3, 2)).unwrap();
    let long = run_experiment(&small_plan(5, 2)).unwrap();
    for record in &short.records {
        let twin = long
            .records
            .iter()
            .find(|r| {
                r.run_index == record.run_index
                    && r.model_id == record.model_id
                    && r.eps_train == record.eps_train
            })
            .expect("record present in the longer experiment");
        assert_eq!(
            serde_json::to_string(record).unwrap(),
            serde_json::to_string(twin).unwrap()
        );
    }
}

#[test]
fn mscr_is_absent_flagged_without_eps_min() {
    let mut plan = small_plan(2, 2);
    plan.include_eps_min = false;
    let matrix = run_experiment(&plan).unwrap();
    assert!(!matrix.has_mscr());
    assert!(matrix.epsilon_min.is_none());
    assert!(matrix.records.iter().all(|r| r.mscr.is_none()));
    let err = tradeoff_curve(&matrix, "1nn").unwrap_err();
    assert!(err.to_string().contains("include_eps_min"));
}

#[test]
fn parent_balls_at_eps_min_never_overlap_across_classes() {
    let data = synth_2d(SynthKind::TwoMoons, 300, 0.08, 9).unwrap();
    let norm = NormMetric::L2;
    let em = min_class_separation(&data, norm, 0).unwrap().epsilon_min;
    let config = AugmentationConfig {
        epsilon: em,
        k: 4,
        norm,
        clip_to_unit: false,
        seed: 3,
    };
    let aug = augment(&data, &config).unwrap();
    // parents of different classes are at distance >= 2 * eps_min, so their
    // corruption balls can touch but never overlap
    for i in 0..data.n() {
        for j in (i + 1)..data.n() {
            if data.label(i) != data.label(j) {
                assert!(norm.distance(data.row(i), data.row(j)) >= 2.0 * em);
            }
        }
    }
    // hence every augmented point keeps distance >= 0 from the other
    // class's balls: no cross-class pair of augmented points can be closer
    // than the containment slack allows
    for i in 0..aug.data().n().min(200) {
        for j in (i + 1)..aug.data().n().min(200) {
            if aug.data().label(i) != aug.data().label(j) {
                let pi = aug.parents()[i] as usize;
                let pj = aug.parents()[j] as usize;
                let parent_dist = norm.distance(data.row(pi), data.row(pj));
                let aug_dist = norm.distance(aug.data().row(i), aug.data().row(j));
                assert!(aug_dist >= parent_dist - 2.0 * em - 1e-12);
            }
        }
    }
}

#[test]
fn one_nn_is_robust_within_half_margin() {
    use rand::Rng;
    use rand::SeedableRng;
    let data = synth_2d(SynthKind::Rings, 120, 0.1, 21).unwrap();
    for norm in [NormMetric::Linf, NormMetric::L2] {
        let model = train(&ModelSpec::knn(), &data, norm).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for p in 0..data.n() {
            let margin = per_point_margin(&data, norm, p).unwrap();
            // queries strictly inside the half-margin ball around p must
            // take p's label
            let radius = 0.49 * margin;
            for _ in 0..5 {
                let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(rng.random());
                let query = sample_ball(data.row(p), radius, norm, &mut rng2);
                assert_eq!(
                    predict(&model, &query, data.d()).unwrap()[0],
                    data.label(p),
                    "{norm}: query near point {p} flipped"
                );
            }
        }
    }
}

#[test]
fn k_study_is_deterministic_and_extends_samples() {
    let mut plan = small_plan(3, 2);
    plan.eps_train_grid = vec![0.005];
    plan.eps_test_grid = vec![0.005];
    let a = k_convergence_study(&plan, &[1, 2, 4]).unwrap();
    let b = k_convergence_study(&plan, &[1, 2, 4]).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    // k = 1 and k = 2 rows agree with independently run studies
    let only_small = k_convergence_study(&plan, &[1, 2]).unwrap();
    assert_eq!(a.rows[0], only_small.rows[0]);
    assert_eq!(a.rows[1], only_small.rows[1]);
}
