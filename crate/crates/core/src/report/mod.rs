//! Rendering: accuracy-matrix CSV, per-run JSON, metadata and SVG plots.
//!
//! Plots are views over the CSV/JSON numbers, never independent sources,
//! and all output bytes are deterministic for fixed inputs. Summary numbers
//! in the CSV carry 9 decimals (round-half-even) so parsing them recovers
//! every mean to 1e-9; plot labels show 6.

mod svg;

pub use svg::fmt_fixed;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{tradeoff_curve, AccuracyMatrix, KStudy, MatrixCell};

use svg::{padded_range, ramp, Canvas, Scale};

const SUMMARY_DECIMALS: usize = 9;
const LABEL_DECIMALS: usize = 6;

/// Palette for per-model series, cycled.
const SERIES_COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Metadata describing how a report was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub toolkit_version: String,
    pub config_hash: Option<String>,
    pub dataset_name: String,
    pub dataset_fingerprint: String,
    pub epsilon_min: Option<f64>,
    pub degenerate_separation: bool,
    pub norm: String,
    pub n_runs: usize,
    pub ci_method: String,
    pub csv_decimals: usize,
    /// True when the grid was too small for a heatmap.
    pub heatmap_skipped: bool,
    /// True when fewer than two models ruled out the comparison plot.
    pub comparison_skipped: bool,
    /// True when no MSCR column was available (include_eps_min off).
    pub mscr_absent: bool,
}

/// Files written by one render call.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportBundle {
    pub files: Vec<PathBuf>,
    pub metadata: ReportMetadata,
}

/// Renders the matrix (and optional k study) into `out_dir`.
pub fn render(
    matrix: &AccuracyMatrix,
    kstudy: Option<&KStudy>,
    out_dir: impl AsRef<Path>,
    config_hash: Option<String>,
) -> Result<ReportBundle> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut files = Vec::new();
    let write = |name: &str, bytes: &[u8]| -> Result<PathBuf> {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(path)
    };

    files.push(write("matrix.csv", matrix_csv(matrix).as_bytes())?);
    let runs_json = serde_json::to_string_pretty(&matrix)
        .map_err(|e| Error::Format(format!("serializing runs: {e}")))?;
    files.push(write("runs.json", runs_json.as_bytes())?);

    let heatmap_possible = matrix.eps_train_grid.len() >= 2 && matrix.eps_test_grid.len() >= 2;
    if heatmap_possible {
        for model_id in &matrix.model_ids {
            let name = format!("heatmap_{model_id}.svg");
            files.push(write(&name, heatmap_svg(matrix, model_id).as_bytes())?);
        }
    } else {
        log::warn!("matrix grid too small for a heatmap; skipping");
    }

    let tradeoff_possible = matrix.has_mscr()
        && matrix.eps_train_grid.len() >= 2
        && matrix.eps_train_grid.contains(&0.0);
    if tradeoff_possible {
        for model_id in &matrix.model_ids {
            let curve = tradeoff_curve(matrix, model_id)?;
            let name = format!("tradeoff_{model_id}.svg");
            files.push(write(&name, tradeoff_svg(model_id, &curve).as_bytes())?);
        }
    }

    let comparison_possible = matrix.model_ids.len() >= 2 && matrix.has_mscr();
    if comparison_possible {
        files.push(write("comparison.svg", comparison_svg(matrix).as_bytes())?);
    }

    if let Some(study) = kstudy {
        files.push(write("kstudy.csv", kstudy_csv(study).as_bytes())?);
        files.push(write("kstudy.svg", kstudy_svg(study).as_bytes())?);
    }

    let metadata = ReportMetadata {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash,
        dataset_name: matrix.dataset_name.clone(),
        dataset_fingerprint: matrix.dataset_fingerprint.clone(),
        epsilon_min: matrix.epsilon_min,
        degenerate_separation: matrix.epsilon_min == Some(0.0),
        norm: matrix.norm.to_string(),
        n_runs: matrix.n_runs,
        ci_method: "student_t".to_string(),
        csv_decimals: SUMMARY_DECIMALS,
        heatmap_skipped: !heatmap_possible,
        comparison_skipped: !comparison_possible,
        mscr_absent: !matrix.has_mscr(),
    };
    let meta_json = serde_json::to_string_pretty(&metadata)
        .map_err(|e| Error::Format(format!("serializing metadata: {e}")))?;
    files.push(write("metadata.json", meta_json.as_bytes())?);

    Ok(ReportBundle { files, metadata })
}

fn fmt_summary(v: f64) -> String {
    fmt_fixed(v, SUMMARY_DECIMALS)
}

fn fmt_label(v: f64) -> String {
    fmt_fixed(v, LABEL_DECIMALS)
}

/// Long-format summary CSV: one row per (model, eps_train, metric).
/// `eps_test` is empty for the clean and mscr rows.
pub fn matrix_csv(matrix: &AccuracyMatrix) -> String {
    let mut out = String::from("model,eps_train,metric,eps_test,mean,ci95_half_width,n_runs\n");
    for cell in &matrix.cells {
        let base = |metric: &str, eps_test: &str, s: &crate::metrics::MetricSummary| {
            format!(
                "{},{},{metric},{eps_test},{},{},{}\n",
                cell.model_id,
                cell.eps_train,
                fmt_summary(s.mean),
                fmt_summary(s.ci95_half_width),
                s.n_runs
            )
        };
        out.push_str(&base("clean", "", &cell.clean));
        for (ti, s) in cell.robust.iter().enumerate() {
            let eps_test = matrix.eps_test_grid[ti].to_string();
            out.push_str(&base("robust", &eps_test, s));
        }
        if let Some(m) = &cell.mscr {
            out.push_str(&base("mscr", "", m));
        }
    }
    out
}

/// Parses a matrix.csv back into (model, eps_train, metric, eps_test, mean,
/// half_width) tuples; used by round-trip checks and the CLI report path.
pub fn parse_matrix_csv(text: &str) -> Result<Vec<(String, f64, String, Option<f64>, f64, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 7 {
            return Err(Error::Parse {
                path: "matrix.csv".into(),
                line: i + 1,
                message: format!("expected 7 cells, found {}", cells.len()),
            });
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                path: "matrix.csv".into(),
                line: i + 1,
                message: format!("{s:?} is not a number"),
            })
        };
        let eps_test = if cells[3].is_empty() {
            None
        } else {
            Some(parse_f(cells[3])?)
        };
        out.push((
            cells[0].to_string(),
            parse_f(cells[1])?,
            cells[2].to_string(),
            eps_test,
            parse_f(cells[4])?,
            parse_f(cells[5])?,
        ));
    }
    Ok(out)
}

/// Renders a standalone k-study (CSV, JSON and SVG) into `out_dir`.
pub fn render_kstudy(study: &KStudy, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    let mut files = Vec::new();
    for (name, bytes) in [
        ("kstudy.csv", kstudy_csv(study).into_bytes()),
        (
            "kstudy.json",
            serde_json::to_string_pretty(study)
                .map_err(|e| Error::Format(format!("serializing k study: {e}")))?
                .into_bytes(),
        ),
        ("kstudy.svg", kstudy_svg(study).into_bytes()),
    ] {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(path.display().to_string(), e))?;
        files.push(path);
    }
    Ok(files)
}

fn kstudy_csv(study: &KStudy) -> String {
    let mut out = String::from("k,robust_mean,ci95_half_width,n_runs\n");
    for row in &study.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.k,
            fmt_summary(row.robust.mean),
            fmt_summary(row.robust.ci95_half_width),
            row.robust.n_runs
        ));
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;

fn frame(canvas: &mut Canvas, title: &str, x_label: &str, y_label: &str) {
    canvas.text(W / 2.0, 20.0, 13.0, "middle", title);
    canvas.line(MARGIN_L, H - MARGIN_B, W - MARGIN_R, H - MARGIN_B, "black", 1.0);
    canvas.line(MARGIN_L, MARGIN_T, MARGIN_L, H - MARGIN_B, "black", 1.0);
    canvas.text(W / 2.0, H - 12.0, 11.0, "middle", x_label);
    canvas.text(14.0, MARGIN_T - 10.0, 11.0, "start", y_label);
}

fn x_scale(lo: f64, hi: f64) -> Scale {
    Scale { data_min: lo, data_max: hi, px_min: MARGIN_L, px_max: W - MARGIN_R }
}

fn y_scale(lo: f64, hi: f64) -> Scale {
    // pixel y grows downward
    Scale { data_min: lo, data_max: hi, px_min: H - MARGIN_B, px_max: MARGIN_T }
}

fn y_ticks(canvas: &mut Canvas, sy: &Scale) {
    for i in 0..=4 {
        let v = sy.data_min + (sy.data_max - sy.data_min) * i as f64 / 4.0;
        let y = sy.map(v);
        canvas.line(MARGIN_L - 4.0, y, MARGIN_L, y, "black", 1.0);
        canvas.text(MARGIN_L - 8.0, y + 3.5, 9.0, "end", &fmt_label(v));
    }
}

fn kstudy_svg(study: &KStudy) -> String {
    let mut canvas = Canvas::new(W, H);
    let title = format!(
        "Robust accuracy vs k ({}, eps_train={}, eps_test={})",
        study.model_id, study.eps_train, study.eps_test
    );
    frame(&mut canvas, &title, "k (corruptions per test point)", "robust accuracy");

    let ks: Vec<f64> = study.rows.iter().map(|r| r.k as f64).collect();
    let spread: Vec<f64> = study
        .rows
        .iter()
        .flat_map(|r| [r.robust.mean - r.robust.ci95_half_width, r.robust.mean + r.robust.ci95_half_width])
        .collect();
    let (ylo, yhi) = padded_range(&spread);
    let (xlo, xhi) = padded_range(&ks);
    let sx = x_scale(xlo, xhi);
    let sy = y_scale(ylo, yhi);
    y_ticks(&mut canvas, &sy);

    let pts: Vec<(f64, f64)> = study
        .rows
        .iter()
        .map(|r| (sx.map(r.k as f64), sy.map(r.robust.mean)))
        .collect();
    canvas.polyline(&pts, SERIES_COLORS[0], 1.5);
    for (row, &(x, y)) in study.rows.iter().zip(&pts) {
        let hw = row.robust.ci95_half_width;
        canvas.line(x, sy.map(row.robust.mean - hw), x, sy.map(row.robust.mean + hw), SERIES_COLORS[0], 1.0);
        canvas.circle(x, y, 3.0, SERIES_COLORS[0]);
        canvas.text(x, H - MARGIN_B + 14.0, 9.0, "middle", &row.k.to_string());
    }
    canvas.into_svg()
}

fn tradeoff_svg(model_id: &str, curve: &[crate::experiment::TradeoffPoint]) -> String {
    let mut canvas = Canvas::new(W, H);
    frame(
        &mut canvas,
        &format!("Accuracy-robustness tradeoff ({model_id})"),
        "clean accuracy",
        "MSCR",
    );
    let xs: Vec<f64> = curve.iter().map(|p| p.clean.mean).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.mscr.mean).collect();
    let (xlo, xhi) = padded_range(&xs);
    let (ylo, yhi) = padded_range(&ys);
    let sx = x_scale(xlo, xhi);
    let sy = y_scale(ylo, yhi);
    y_ticks(&mut canvas, &sy);

    let pts: Vec<(f64, f64)> = curve
        .iter()
        .map(|p| (sx.map(p.clean.mean), sy.map(p.mscr.mean)))
        .collect();
    canvas.polyline(&pts, "#888888", 1.0);
    for (p, &(x, y)) in curve.iter().zip(&pts) {
        let color = if p.eps_train == 0.0 {
            "#000000" // baseline
        } else if p.contradicts_tradeoff {
            SERIES_COLORS[1] // beats the baseline on both axes
        } else {
            SERIES_COLORS[0]
        };
        canvas.circle(x, y, 4.0, color);
        canvas.text(x + 6.0, y - 6.0, 8.0, "start", &format!("eps_train={}", p.eps_train));
    }
    canvas.into_svg()
}

fn comparison_svg(matrix: &AccuracyMatrix) -> String {
    // Figure-5 shape: clean accuracy (left panel) and MSCR (right panel)
    // per eps_train, one series per model.
    let mut canvas = Canvas::new(W * 2.0, H);
    let panels: [(&str, Box<dyn Fn(&MatrixCell) -> f64>); 2] = [
        ("clean accuracy", Box::new(|c: &MatrixCell| c.clean.mean)),
        ("MSCR", Box::new(|c: &MatrixCell| c.mscr.map(|m| m.mean).unwrap_or(0.0))),
    ];
    for (panel, (label, value)) in panels.iter().enumerate() {
        let off = panel as f64 * W;
        canvas.text(off + W / 2.0, 20.0, 13.0, "middle", &format!("Model comparison: {label}"));
        canvas.line(off + MARGIN_L, H - MARGIN_B, off + W - MARGIN_R, H - MARGIN_B, "black", 1.0);
        canvas.line(off + MARGIN_L, MARGIN_T, off + MARGIN_L, H - MARGIN_B, "black", 1.0);
        canvas.text(off + W / 2.0, H - 12.0, 11.0, "middle", "eps_train");

        let values: Vec<f64> = matrix.cells.iter().map(|c| value(c)).collect();
        let (ylo, yhi) = padded_range(&values);
        let sy = y_scale(ylo, yhi);
        for i in 0..=4 {
            let v = ylo + (yhi - ylo) * i as f64 / 4.0;
            let y = sy.map(v);
            canvas.line(off + MARGIN_L - 4.0, y, off + MARGIN_L, y, "black", 1.0);
            canvas.text(off + MARGIN_L - 8.0, y + 3.5, 9.0, "end", &fmt_label(v));
        }

        let n_groups = matrix.eps_train_grid.len();
        let n_models = matrix.model_ids.len();
        let plot_w = W - MARGIN_L - MARGIN_R;
        let group_w = plot_w / n_groups as f64;
        let bar_w = (group_w * 0.8) / n_models as f64;
        let base_y = sy.map(ylo.max(0.0).min(yhi));
        for (ei, &et) in matrix.eps_train_grid.iter().enumerate() {
            let gx = off + MARGIN_L + ei as f64 * group_w + group_w * 0.1;
            canvas.text(gx + group_w * 0.4, H - MARGIN_B + 14.0, 8.0, "middle", &et.to_string());
            for (mi, model_id) in matrix.model_ids.iter().enumerate() {
                let cell = &matrix.cells[mi * n_groups + ei];
                let v = value(cell);
                let y = sy.map(v);
                let (top, height) = if y <= base_y { (y, base_y - y) } else { (base_y, y - base_y) };
                canvas.rect(
                    gx + mi as f64 * bar_w,
                    top,
                    bar_w.max(1.0),
                    height.max(0.5),
                    SERIES_COLORS[mi % SERIES_COLORS.len()],
                    None,
                );
                if panel == 0 && ei == 0 {
                    canvas.text(
                        off + MARGIN_L + 8.0,
                        MARGIN_T + 14.0 * (mi as f64 + 1.0),
                        10.0,
                        "start",
                        &format!("{} {}", swatch(mi), model_id),
                    );
                }
            }
        }
    }
    canvas.into_svg()
}

fn swatch(mi: usize) -> &'static str {
    ["[1]", "[2]", "[3]", "[4]"][mi % 4]
}

fn heatmap_svg(matrix: &AccuracyMatrix, model_id: &str) -> String {
    let mut canvas = Canvas::new(W, H);
    frame(
        &mut canvas,
        &format!("Robust accuracy over eps_train x eps_test ({model_id})"),
        "eps_train",
        "eps_test",
    );
    let m = matrix.model_ids.iter().position(|s| s == model_id).unwrap();
    let n_cols = matrix.eps_train_grid.len();
    let n_rows = matrix.eps_test_grid.len();
    let annotations = &matrix.annotations[m];

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for ei in 0..n_cols {
        for ti in 0..n_rows {
            let v = matrix.cells[m * n_cols + ei].robust[ti].mean;
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let span = if hi > lo { hi - lo } else { 1.0 };

    let plot_w = W - MARGIN_L - MARGIN_R;
    let plot_h = H - MARGIN_T - MARGIN_B;
    let cell_w = plot_w / n_cols as f64;
    let cell_h = plot_h / n_rows as f64;

    for (ti, &et) in matrix.eps_test_grid.iter().enumerate() {
        // low eps_test at the bottom
        let y = H - MARGIN_B - (ti as f64 + 1.0) * cell_h;
        canvas.text(MARGIN_L - 8.0, y + cell_h / 2.0 + 3.0, 8.0, "end", &et.to_string());
        for (ei, &e_tr) in matrix.eps_train_grid.iter().enumerate() {
            let x = MARGIN_L + ei as f64 * cell_w;
            let v = matrix.cells[m * n_cols + ei].robust[ti].mean;
            let on_diagonal = annotations.diagonal.contains(&(ti, ei));
            canvas.rect(
                x,
                y,
                cell_w,
                cell_h,
                &ramp((v - lo) / span),
                on_diagonal.then_some("#ffffff"),
            );
            if ti == 0 {
                canvas.text(x + cell_w / 2.0, H - MARGIN_B + 14.0, 8.0, "middle", &e_tr.to_string());
            }
        }
        // per-row optimum marker
        let best = annotations.best_eps_train_per_row[ti];
        canvas.circle(
            MARGIN_L + best as f64 * cell_w + cell_w / 2.0,
            y + cell_h / 2.0,
            3.5,
            "#ff7f0e",
        );
    }
    canvas.into_svg()
}
