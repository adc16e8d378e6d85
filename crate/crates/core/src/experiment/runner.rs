//! Experiment execution.
//!
//! Each run draws a fresh split, trains every (model, eps_train) pair on
//! the original training points plus k_train ball corruptions per point
//! (eps_train = 0 trains on the raw data, no augmentation call at all),
//! then measures clean accuracy and robust accuracy over k_test corruptions
//! per test point at every eps_test. MSCR is computed per run at
//! eps_test = epsilon_min and averaged afterwards, not recomputed from
//! averaged accuracies. All randomness derives from (master_seed, run,
//! grid index) sub-streams, so output is bit-identical for any thread
//! count and results for `runs = R` are a prefix of `runs = R' > R`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augmentation::{augment, AugmentationConfig, Augmented};
use crate::classifiers::{predict, predict_dataset, train};
use crate::dataset::{split, Dataset};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, mean_ci95, mscr, EpsAccuracy, MetricSummary, RunRecord};
use crate::rng::{mix_seed, role};
use crate::separation::min_class_separation;

use super::{AccuracyMatrix, ExperimentPlan, MatrixCell, ModelAnnotations};

/// Runs the full plan and aggregates the accuracy matrix.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<AccuracyMatrix> {
    plan.validate()?;
    let dataset = plan.dataset.load()?;

    let epsilon_min = if plan.include_eps_min {
        let sep = min_class_separation(&dataset, plan.norm, 0)?;
        if sep.is_degenerate() {
            log::warn!(
                "epsilon_min = 0 (degenerate separation); MSCR will equal the zero-noise case"
            );
        }
        Some(sep.epsilon_min)
    } else {
        None
    };

    let eps_train = inject(&plan.eps_train_grid, epsilon_min);
    let eps_test = inject(&plan.eps_test_grid, epsilon_min);

    let per_run: Vec<Vec<RunRecord>> = (0..plan.runs)
        .into_par_iter()
        .map(|run| {
            single_run(plan, &dataset, &eps_train, &eps_test, epsilon_min, run).map_err(|e| {
                Error::RunFailed {
                    run_index: run,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;

    summarize(plan, &dataset, eps_train, eps_test, epsilon_min, per_run)
}

fn inject(grid: &[f64], value: Option<f64>) -> Vec<f64> {
    let mut out = grid.to_vec();
    if let Some(v) = value {
        if !out.contains(&v) {
            out.push(v);
            out.sort_by(f64::total_cmp);
        }
    }
    out
}

fn single_run(
    plan: &ExperimentPlan,
    dataset: &Dataset,
    eps_train: &[f64],
    eps_test: &[f64],
    epsilon_min: Option<f64>,
    run: usize,
) -> Result<Vec<RunRecord>> {
    let mut split_spec = plan.split;
    split_spec.seed = mix_seed(plan.master_seed, &[role::SPLIT, run as u64, plan.split.seed]);
    let (train_set, test_set) = split(dataset, &split_spec)?;

    // Test corruptions are shared by every model and eps_train column of
    // this run: model comparisons see identical noise.
    let test_augs: Vec<Option<Augmented>> = eps_test
        .iter()
        .enumerate()
        .map(|(ti, &et)| -> Result<Option<Augmented>> {
            if et == 0.0 {
                return Ok(None);
            }
            let cfg = AugmentationConfig {
                epsilon: et,
                k: plan.k_test,
                norm: plan.norm,
                clip_to_unit: plan.clip_to_unit,
                seed: mix_seed(plan.master_seed, &[role::TEST_AUG, run as u64, ti as u64]),
            };
            augment(&test_set, &cfg).map(Some)
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(plan.model_specs.len() * eps_train.len());
    for (ei, &e_tr) in eps_train.iter().enumerate() {
        let train_data = if e_tr == 0.0 {
            train_set.clone()
        } else {
            let cfg = AugmentationConfig {
                epsilon: e_tr,
                k: plan.k_train,
                norm: plan.norm,
                clip_to_unit: plan.clip_to_unit,
                seed: mix_seed(plan.master_seed, &[role::TRAIN_AUG, run as u64, ei as u64]),
            };
            train_set.concat(augment(&train_set, &cfg)?.data())?
        };

        for (mi, spec) in plan.model_specs.iter().enumerate() {
            let seeded = spec.clone().with_seed(mix_seed(
                plan.master_seed,
                &[role::MODEL, run as u64, mi as u64, ei as u64, spec.seed],
            ));
            let model = train(&seeded, &train_data, plan.norm)?;

            let clean_preds = predict_dataset(&model, &test_set)?;
            let acc_clean = accuracy(&clean_preds, test_set.labels())?;

            let mut acc_robust = Vec::with_capacity(eps_test.len());
            for (ti, &et) in eps_test.iter().enumerate() {
                let value = match &test_augs[ti] {
                    None => acc_clean,
                    Some(aug) => {
                        let preds =
                            predict(&model, aug.data().features(), aug.data().d())?;
                        accuracy(&preds, aug.data().labels())?
                    }
                };
                acc_robust.push(EpsAccuracy { eps_test: et, value });
            }

            let run_mscr = match epsilon_min {
                Some(em) => {
                    let at_min = acc_robust
                        .iter()
                        .find(|e| e.eps_test == em)
                        .map(|e| e.value)
                        .expect("epsilon_min injected into the test grid");
                    Some(mscr(at_min, acc_clean)?)
                }
                None => None,
            };

            records.push(RunRecord {
                model_id: spec.model_id(),
                run_index: run,
                eps_train: e_tr,
                acc_clean,
                acc_robust,
                mscr: run_mscr,
            });
        }
    }
    Ok(records)
}

fn summarize(
    plan: &ExperimentPlan,
    dataset: &Dataset,
    eps_train: Vec<f64>,
    eps_test: Vec<f64>,
    epsilon_min: Option<f64>,
    per_run: Vec<Vec<RunRecord>>,
) -> Result<AccuracyMatrix> {
    let model_ids: Vec<String> = plan.model_specs.iter().map(|s| s.model_id()).collect();
    let mut cells = Vec::with_capacity(model_ids.len() * eps_train.len());
    for model_id in &model_ids {
        for &e_tr in &eps_train {
            let runs: Vec<&RunRecord> = per_run
                .iter()
                .flatten()
                .filter(|r| &r.model_id == model_id && r.eps_train == e_tr)
                .collect();
            let clean: Vec<f64> = runs.iter().map(|r| r.acc_clean).collect();
            let mut robust = Vec::with_capacity(eps_test.len());
            for (ti, _) in eps_test.iter().enumerate() {
                let vals: Vec<f64> = runs.iter().map(|r| r.acc_robust[ti].value).collect();
                robust.push(mean_ci95(&vals)?);
            }
            let mscr_summary = if epsilon_min.is_some() {
                let vals: Vec<f64> = runs.iter().filter_map(|r| r.mscr).collect();
                Some(mean_ci95(&vals)?)
            } else {
                None
            };
            cells.push(MatrixCell {
                model_id: model_id.clone(),
                eps_train: e_tr,
                clean: mean_ci95(&clean)?,
                robust,
                mscr: mscr_summary,
            });
        }
    }

    let annotations = annotate(&model_ids, &eps_train, &eps_test, &cells);

    let mut records: Vec<RunRecord> = per_run.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        (a.run_index, &a.model_id, a.eps_train)
            .partial_cmp(&(b.run_index, &b.model_id, b.eps_train))
            .unwrap()
    });

    Ok(AccuracyMatrix {
        model_ids,
        eps_train_grid: eps_train,
        eps_test_grid: eps_test,
        epsilon_min,
        norm: plan.norm,
        n_runs: plan.runs,
        dataset_name: dataset.name().to_string(),
        dataset_fingerprint: dataset.fingerprint(),
        cells,
        annotations,
        records,
    })
}

fn annotate(
    model_ids: &[String],
    eps_train: &[f64],
    eps_test: &[f64],
    cells: &[MatrixCell],
) -> Vec<ModelAnnotations> {
    model_ids
        .iter()
        .enumerate()
        .map(|(m, model_id)| {
            let cell = |e: usize| &cells[m * eps_train.len() + e];
            let mut best_per_row = Vec::with_capacity(eps_test.len());
            let mut global = (0usize, 0usize);
            let mut global_best = f64::NEG_INFINITY;
            for ti in 0..eps_test.len() {
                let mut best = 0usize;
                for ei in 1..eps_train.len() {
                    if cell(ei).robust[ti].mean > cell(best).robust[ti].mean {
                        best = ei;
                    }
                }
                best_per_row.push(best);
                for ei in 0..eps_train.len() {
                    if cell(ei).robust[ti].mean > global_best {
                        global_best = cell(ei).robust[ti].mean;
                        global = (ti, ei);
                    }
                }
            }
            let diagonal = eps_test
                .iter()
                .enumerate()
                .filter_map(|(ti, &et)| {
                    eps_train.iter().position(|&e| e == et).map(|ei| (ti, ei))
                })
                .collect();
            ModelAnnotations {
                model_id: model_id.clone(),
                best_eps_train_per_row: best_per_row,
                diagonal,
                global_optimum: global,
            }
        })
        .collect()
}

/// One row of a k-convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStudyRow {
    pub k: usize,
    pub robust: MetricSummary,
}

/// Robust accuracy as a function of k (corruptions per test point).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStudy {
    pub model_id: String,
    pub eps_train: f64,
    pub eps_test: f64,
    pub n_runs: usize,
    pub rows: Vec<KStudyRow>,
}

/// Measures robust accuracy for each candidate k.
///
/// Uses the plan's first model, first eps_train value and first positive
/// eps_test value. Thanks to stream-stable sampling the k2 > k1 corruption
/// set extends the k1 set per parent: each model is trained once per run
/// and evaluated on prefixes, which is exactly equivalent to rerunning the
/// experiment at every k.
pub fn k_convergence_study(plan: &ExperimentPlan, k_candidates: &[usize]) -> Result<KStudy> {
    plan.validate()?;
    if k_candidates.is_empty() {
        return Err(Error::Validation("k_candidates is empty".into()));
    }
    if k_candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("k_candidates must be strictly ascending".into()));
    }
    if k_candidates[0] == 0 {
        return Err(Error::Validation("k values must be >= 1".into()));
    }
    let eps_test = *plan
        .eps_test_grid
        .iter()
        .find(|&&e| e > 0.0)
        .ok_or_else(|| {
            Error::Validation("k study needs a positive eps_test in the grid".into())
        })?;
    let ti = plan.eps_test_grid.iter().position(|&e| e == eps_test).unwrap();
    let eps_train = plan.eps_train_grid[0];
    let spec = &plan.model_specs[0];
    let k_max = *k_candidates.last().unwrap();
    let dataset = plan.dataset.load()?;

    let per_run: Vec<Vec<f64>> = (0..plan.runs)
        .into_par_iter()
        .map(|run| -> Result<Vec<f64>> {
            let mut split_spec = plan.split;
            split_spec.seed =
                mix_seed(plan.master_seed, &[role::SPLIT, run as u64, plan.split.seed]);
            let (train_set, test_set) = split(&dataset, &split_spec)?;

            let train_data = if eps_train == 0.0 {
                train_set.clone()
            } else {
                let cfg = AugmentationConfig {
                    epsilon: eps_train,
                    k: plan.k_train,
                    norm: plan.norm,
                    clip_to_unit: plan.clip_to_unit,
                    seed: mix_seed(plan.master_seed, &[role::TRAIN_AUG, run as u64, 0]),
                };
                train_set.concat(augment(&train_set, &cfg)?.data())?
            };
            let seeded = spec.clone().with_seed(mix_seed(
                plan.master_seed,
                &[role::MODEL, run as u64, 0, 0, spec.seed],
            ));
            let model = train(&seeded, &train_data, plan.norm)?;

            let cfg = AugmentationConfig {
                epsilon: eps_test,
                k: k_max,
                norm: plan.norm,
                clip_to_unit: plan.clip_to_unit,
                seed: mix_seed(plan.master_seed, &[role::TEST_AUG, run as u64, ti as u64]),
            };
            let aug = augment(&test_set, &cfg)?;
            let preds = predict(&model, aug.data().features(), aug.data().d())?;
            let correct: Vec<bool> = preds
                .iter()
                .zip(aug.data().labels())
                .map(|(p, t)| p == t)
                .collect();

            // prefix accuracy per candidate k
            let n_test = test_set.n();
            Ok(k_candidates
                .iter()
                .map(|&k| {
                    let mut hits = 0usize;
                    for parent in 0..n_test {
                        for s in 0..k {
                            if correct[parent * k_max + s] {
                                hits += 1;
                            }
                        }
                    }
                    hits as f64 / (n_test * k) as f64
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let rows = k_candidates
        .iter()
        .enumerate()
        .map(|(i, &k)| -> Result<KStudyRow> {
            let vals: Vec<f64> = per_run.iter().map(|r| r[i]).collect();
            Ok(KStudyRow {
                k,
                robust: mean_ci95(&vals)?,
            })
        })
        .collect::<Result<_>>()?;

    Ok(KStudy {
        model_id: spec.model_id(),
        eps_train,
        eps_test,
        n_runs: plan.runs,
        rows,
    })
}
