//! Accuracy, MSCR and run-aggregated statistics.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Fraction of exact label matches.
pub fn accuracy(predictions: &[u32], truth: &[u32]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("accuracy over zero predictions".into()));
    }
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            actual: predictions.len(),
        });
    }
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / predictions.len() as f64)
}

/// Minimal Separation Corruption Robustness: the relative win or loss of
/// accuracy under epsilon_min-bounded corruptions,
/// `(acc_robust - acc_clean) / acc_clean`.
///
/// Sign semantics: 0 means fully robust at the dataset's separation, < 0
/// robustness losses, > 0 corruptions that correct more points than they
/// break. Zero clean accuracy leaves the ratio meaningless and is an error.
pub fn mscr(acc_robust_at_eps_min: f64, acc_clean: f64) -> Result<f64> {
    for (name, v) in [("acc_robust", acc_robust_at_eps_min), ("acc_clean", acc_clean)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Validation(format!("{name} = {v} outside [0, 1]")));
        }
    }
    if acc_clean == 0.0 {
        return Err(Error::UndefinedMscr);
    }
    Ok((acc_robust_at_eps_min - acc_clean) / acc_clean)
}

/// Mean with a symmetric confidence interval over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub ci95_half_width: f64,
    pub n_runs: usize,
}

impl MetricSummary {
    /// Single-run summaries carry no interval; callers should flag them.
    pub fn is_single_run(&self) -> bool {
        self.n_runs == 1
    }
}

/// Arithmetic mean and Student-t confidence interval half-width at `level`
/// (two-sided), using the sample standard deviation. One value yields
/// half-width 0.
pub fn mean_ci(values: &[f64], level: f64) -> Result<MetricSummary> {
    if values.is_empty() {
        return Err(Error::EmptyInput("mean_ci over zero values".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(Error::Validation(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(MetricSummary {
            mean,
            ci95_half_width: 0.0,
            n_runs: 1,
        });
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let t = student_t_quantile(0.5 + level / 2.0, (n - 1) as f64);
    Ok(MetricSummary {
        mean,
        ci95_half_width: t * sd / (n as f64).sqrt(),
        n_runs: n,
    })
}

/// 95% two-sided Student-t summary.
pub fn mean_ci95(values: &[f64]) -> Result<MetricSummary> {
    mean_ci(values, 0.95)
}

fn student_t_quantile(p: f64, df: f64) -> f64 {
    StudentsT::new(0.0, 1.0, df)
        .expect("valid Student-t parameters")
        .inverse_cdf(p)
}

/// One-sided paired comparison: true when the mean of `diffs` is above zero
/// at the given confidence level (t = mean / (s / sqrt(n)) exceeds the
/// one-sided t quantile). Zero-variance inputs decide by sign alone.
pub fn paired_mean_above_zero(diffs: &[f64], level: f64) -> Result<bool> {
    if diffs.len() < 2 {
        return Err(Error::Validation(
            "paired comparison needs at least 2 runs".into(),
        ));
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok(mean > 0.0);
    }
    let t = mean / (var.sqrt() / n.sqrt());
    Ok(t >= student_t_quantile(level, n - 1.0))
}

/// Per-run metric record: one trained model evaluated in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model_id: String,
    pub run_index: usize,
    /// Training corruption radius this model was trained with.
    pub eps_train: f64,
    pub acc_clean: f64,
    /// Robust accuracy per test corruption radius, grid order.
    pub acc_robust: Vec<EpsAccuracy>,
    /// MSCR at epsilon_min; absent when epsilon_min was not tested.
    pub mscr: Option<f64>,
}

/// Robust accuracy at one test radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsAccuracy {
    pub eps_test: f64,
    pub value: f64,
}

impl RunRecord {
    pub fn robust_at(&self, eps_test: f64) -> Option<f64> {
        self.acc_robust
            .iter()
            .find(|e| e.eps_test == eps_test)
            .map(|e| e.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn accuracy_counts_matches() {
        assert_eq!(accuracy(&[1, 2, 1, 2], &[1, 2, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 1, 1], &[0, 1, 0, 1]).unwrap(), 0.75);
        assert_eq!(accuracy(&[9, 9], &[1, 2]).unwrap(), 0.0);
        assert!(accuracy(&[], &[]).is_err());
        assert!(accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn mscr_corner_cases() {
        assert_eq!(mscr(0.95, 0.95).unwrap(), 0.0);
        assert_abs_diff_eq!(mscr(0.90, 0.95).unwrap(), -0.05263157894736842, epsilon = 1e-15);
        assert_abs_diff_eq!(mscr(0.96, 0.95).unwrap(), 0.010526315789473672, epsilon = 1e-15);
        assert!(matches!(mscr(0.5, 0.0), Err(Error::UndefinedMscr)));
        assert!(mscr(1.5, 0.5).is_err());
    }

    #[test]
    fn mscr_sign_follows_accuracy_difference() {
        for (rob, clean) in [(0.3, 0.9), (0.9, 0.3), (0.42, 0.42)] {
            let m = mscr(rob, clean).unwrap();
            assert_eq!(m.signum(), (rob - clean).signum());
        }
    }

    #[test]
    fn mean_ci_zero_variance() {
        let s = mean_ci95(&[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.ci95_half_width, 0.0);
        assert_eq!(s.n_runs, 3);
    }

    #[test]
    fn mean_ci_single_value_is_flagged() {
        let s = mean_ci95(&[0.7]).unwrap();
        assert_eq!(s.mean, 0.7);
        assert_eq!(s.ci95_half_width, 0.0);
        assert!(s.is_single_run());
    }

    #[test]
    fn mean_ci_uses_student_t() {
        // n = 4, sd = 1: half-width = t(0.975, 3) / 2 = 3.18245 / 2
        let s = mean_ci95(&[-1.0, 1.0, -1.0, 1.0]).unwrap();
        let sd = (4.0f64 / 3.0).sqrt();
        let expected = 3.182446305284263 * sd / 2.0;
        assert_abs_diff_eq!(s.ci95_half_width, expected, epsilon = 1e-9);
    }

    #[test]
    fn paired_comparison_detects_clear_shift() {
        let up: Vec<f64> = (0..50).map(|i| 0.01 + 0.001 * ((i % 5) as f64)).collect();
        assert!(paired_mean_above_zero(&up, 0.95).unwrap());
        let noise: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 0.01 } else { -0.01 }).collect();
        assert!(!paired_mean_above_zero(&noise, 0.95).unwrap());
    }
}
