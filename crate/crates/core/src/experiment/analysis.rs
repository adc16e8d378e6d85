//! Derived views of an accuracy matrix: tradeoff curves and per-row optima.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricSummary;

use super::AccuracyMatrix;

/// One point of an accuracy-robustness tradeoff curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub eps_train: f64,
    pub clean: MetricSummary,
    pub mscr: MetricSummary,
    /// True when both mean clean accuracy and mean MSCR exceed the
    /// eps_train = 0 baseline: this point contradicts an inherent tradeoff.
    pub contradicts_tradeoff: bool,
}

/// Clean-accuracy / MSCR pairs per eps_train for one model, ordered by
/// eps_train, each flagged when it beats the eps_train = 0 baseline on
/// both axes.
pub fn tradeoff_curve(matrix: &AccuracyMatrix, model_id: &str) -> Result<Vec<TradeoffPoint>> {
    let cells = matrix.cells_for_model(model_id);
    if cells.is_empty() {
        return Err(Error::Validation(format!(
            "model {model_id:?} not present in the matrix"
        )));
    }
    if cells.len() < 2 {
        return Err(Error::Validation(format!(
            "tradeoff curve needs at least 2 eps_train values for {model_id:?}, found {}",
            cells.len()
        )));
    }
    let baseline = cells
        .iter()
        .find(|c| c.eps_train == 0.0)
        .ok_or_else(|| {
            Error::Validation("tradeoff curve needs the eps_train = 0 baseline".into())
        })?;
    let baseline_mscr = summary_mscr(baseline)?;
    let baseline_clean = baseline.clean;

    let mut points: Vec<TradeoffPoint> = cells
        .iter()
        .map(|c| -> Result<TradeoffPoint> {
            let mscr = summary_mscr(c)?;
            Ok(TradeoffPoint {
                eps_train: c.eps_train,
                clean: c.clean,
                mscr,
                contradicts_tradeoff: c.eps_train != 0.0
                    && c.clean.mean > baseline_clean.mean
                    && mscr.mean > baseline_mscr.mean,
            })
        })
        .collect::<Result<_>>()?;
    points.sort_by(|a, b| a.eps_train.total_cmp(&b.eps_train));
    Ok(points)
}

fn summary_mscr(cell: &super::MatrixCell) -> Result<MetricSummary> {
    cell.mscr.ok_or_else(|| {
        Error::Validation(
            "matrix has no MSCR summaries; run with include_eps_min enabled".into(),
        )
    })
}

/// Direction of a per-row optimum's deviation from the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deviation {
    /// Best eps_train above the diagonal (eps_train > eps_test side).
    TrainAboveTest,
    /// Best eps_train below the diagonal.
    TrainBelowTest,
}

/// One eps_test row of the optima report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimaRow {
    pub model_id: String,
    pub eps_test: f64,
    /// eps_train with the highest mean (robust) accuracy in this row;
    /// ties resolve to the smaller eps_train.
    pub best_eps_train: f64,
    /// Grid value closest to eps_test (the "diagonal" column).
    pub nearest_eps_train: f64,
    /// Present when the optimum deviates from the diagonal.
    pub deviation: Option<Deviation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimaReport {
    pub rows: Vec<OptimaRow>,
}

impl OptimaReport {
    pub fn deviating_rows(&self) -> Vec<&OptimaRow> {
        self.rows.iter().filter(|r| r.deviation.is_some()).collect()
    }
}

/// Best eps_train per eps_test row for every model, with an indicator of
/// where the optimum deviates from the diagonal.
pub fn optima_report(matrix: &AccuracyMatrix) -> OptimaReport {
    let mut rows = Vec::new();
    for annotations in &matrix.annotations {
        for (ti, &eps_test) in matrix.eps_test_grid.iter().enumerate() {
            let best_ei = annotations.best_eps_train_per_row[ti];
            let best_eps_train = matrix.eps_train_grid[best_ei];
            // nearest grid value to eps_test; ties to the smaller value
            let nearest_eps_train = *matrix
                .eps_train_grid
                .iter()
                .min_by(|a, b| {
                    (*a - eps_test)
                        .abs()
                        .total_cmp(&(*b - eps_test).abs())
                        .then(a.total_cmp(b))
                })
                .unwrap();
            let deviation = if best_eps_train > nearest_eps_train {
                Some(Deviation::TrainAboveTest)
            } else if best_eps_train < nearest_eps_train {
                Some(Deviation::TrainBelowTest)
            } else {
                None
            };
            rows.push(OptimaRow {
                model_id: annotations.model_id.clone(),
                eps_test,
                best_eps_train,
                nearest_eps_train,
                deviation,
            });
        }
    }
    OptimaReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{MatrixCell, ModelAnnotations};
    use crate::metrics::MetricSummary;
    use crate::separation::NormMetric;

    fn summary(mean: f64) -> MetricSummary {
        MetricSummary {
            mean,
            ci95_half_width: 0.01,
            n_runs: 10,
        }
    }

    /// Hand-built matrix: one model, robust accuracy peaks at the given
    /// eps_train column per row.
    fn matrix(clean: &[f64], mscr: &[f64], robust_rows: &[Vec<f64>], eps_train: &[f64], eps_test: &[f64]) -> AccuracyMatrix {
        let cells: Vec<MatrixCell> = eps_train
            .iter()
            .enumerate()
            .map(|(ei, &et)| MatrixCell {
                model_id: "rf100".into(),
                eps_train: et,
                clean: summary(clean[ei]),
                robust: robust_rows.iter().map(|row| summary(row[ei])).collect(),
                mscr: Some(summary(mscr[ei])),
            })
            .collect();
        let best_per_row: Vec<usize> = robust_rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by(|(ia, a), (ib, b)| a.total_cmp(b).then(ib.cmp(ia)))
                    .unwrap()
                    .0
            })
            .collect();
        AccuracyMatrix {
            model_ids: vec!["rf100".into()],
            eps_train_grid: eps_train.to_vec(),
            eps_test_grid: eps_test.to_vec(),
            epsilon_min: Some(0.004),
            norm: NormMetric::Linf,
            n_runs: 10,
            dataset_name: "synthetic".into(),
            dataset_fingerprint: "0".into(),
            cells,
            annotations: vec![ModelAnnotations {
                model_id: "rf100".into(),
                best_eps_train_per_row: best_per_row,
                diagonal: vec![],
                global_optimum: (0, 0),
            }],
            records: vec![],
        }
    }

    #[test]
    fn flags_points_beating_the_baseline_on_both_axes() {
        let m = matrix(
            &[0.95, 0.96, 0.94],
            &[-0.02, -0.01, 0.0],
            &[vec![0.9, 0.9, 0.9]],
            &[0.0, 0.007, 0.02],
            &[0.0],
        );
        let curve = tradeoff_curve(&m, "rf100").unwrap();
        assert!(!curve[0].contradicts_tradeoff); // baseline itself
        assert!(curve[1].contradicts_tradeoff); // better on both axes
        assert!(!curve[2].contradicts_tradeoff); // clean dropped
    }

    #[test]
    fn monotone_degrading_matrix_has_no_flags() {
        let m = matrix(
            &[0.99, 0.98, 0.97],
            &[-0.03, -0.02, -0.01],
            &[vec![0.9, 0.9, 0.9]],
            &[0.0, 0.01, 0.02],
            &[0.0],
        );
        let curve = tradeoff_curve(&m, "rf100").unwrap();
        assert!(curve.iter().all(|p| !p.contradicts_tradeoff));
    }

    #[test]
    fn missing_baseline_is_an_error() {
        let m = matrix(
            &[0.95, 0.96],
            &[-0.02, -0.01],
            &[vec![0.9, 0.9]],
            &[0.005, 0.01],
            &[0.0],
        );
        assert!(tradeoff_curve(&m, "rf100").is_err());
    }

    #[test]
    fn baseline_only_matrix_is_rejected() {
        let m = matrix(&[0.95], &[-0.02], &[vec![0.9]], &[0.0], &[0.0]);
        assert!(tradeoff_curve(&m, "rf100").is_err());
    }

    #[test]
    fn diagonal_dominance_yields_no_deviations() {
        // robust accuracy maximal exactly on the diagonal
        let m = matrix(
            &[0.95; 3],
            &[0.0; 3],
            &[
                vec![0.99, 0.90, 0.80],
                vec![0.90, 0.99, 0.90],
                vec![0.80, 0.90, 0.99],
            ],
            &[0.0, 0.01, 0.02],
            &[0.0, 0.01, 0.02],
        );
        let report = optima_report(&m);
        assert!(report.deviating_rows().is_empty());
    }

    #[test]
    fn low_noise_rows_peaking_high_flag_train_above_test() {
        // paper-shaped: rows at low eps_test peak at eps_train > eps_test
        let m = matrix(
            &[0.95; 3],
            &[0.0; 3],
            &[
                vec![0.90, 0.99, 0.80], // eps_test = 0 peaks at eps_train = 0.01
                vec![0.85, 0.90, 0.99], // eps_test = 0.01 peaks at eps_train = 0.02
                vec![0.80, 0.90, 0.99],
            ],
            &[0.0, 0.01, 0.02],
            &[0.0, 0.01, 0.02],
        );
        let report = optima_report(&m);
        assert_eq!(report.rows[0].deviation, Some(Deviation::TrainAboveTest));
        assert_eq!(report.rows[1].deviation, Some(Deviation::TrainAboveTest));
        assert_eq!(report.rows[2].deviation, None);
    }

    #[test]
    fn single_column_grid_is_trivially_optimal() {
        let m = matrix(
            &[0.95],
            &[0.0],
            &[vec![0.99], vec![0.98]],
            &[0.01],
            &[0.0, 0.01],
        );
        let report = optima_report(&m);
        for row in &report.rows {
            assert_eq!(row.best_eps_train, 0.01);
            assert_eq!(row.nearest_eps_train, 0.01);
            assert_eq!(row.deviation, None);
        }
    }
}
