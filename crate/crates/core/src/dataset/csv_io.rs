//! CSV loading and writing.
//!
//! Comma-separated, optional header, UTF-8, decimal point. Features are
//! min-max normalized per coordinate on load; the observed ranges are kept
//! on the dataset for reporting. Label values may be arbitrary text; they
//! are mapped to dense ids (numeric labels sort numerically, anything else
//! lexicographically).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::Dataset;

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Parses a CLI-style selector: pure digits select by index, anything
    /// else by header name.
    pub fn parse(s: &str) -> LabelColumn {
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            LabelColumn::Index(s.parse().unwrap())
        } else {
            LabelColumn::Name(s.to_string())
        }
    }
}

/// Loads a CSV classification dataset and normalizes features to `[0, 1]`.
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{path_str}: {e}")))?;

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            path: path_str.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        rows.push(rec);
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("{path_str}: no rows")));
    }

    let width = rows[0].len();
    if width < 2 {
        return Err(Error::Format(format!(
            "{path_str}: need at least one feature column plus a label column"
        )));
    }

    // Resolve the label column and decide whether row 1 is a header.
    let (label_idx, header) = match label_column {
        LabelColumn::Name(name) => {
            let idx = rows[0]
                .iter()
                .position(|cell| cell.trim() == name)
                .ok_or_else(|| {
                    Error::Format(format!(
                        "{path_str}: label column {name:?} not found in header row"
                    ))
                })?;
            (idx, true)
        }
        LabelColumn::Index(idx) => {
            if *idx >= width {
                return Err(Error::Format(format!(
                    "{path_str}: label column index {idx} out of range (row width {width})"
                )));
            }
            // Header heuristic: a first row whose feature cells do not all
            // parse as numbers is a header.
            let header = rows[0]
                .iter()
                .enumerate()
                .any(|(c, cell)| c != *idx && cell.trim().parse::<f64>().is_err());
            (*idx, header)
        }
    };

    let data_rows = if header { &rows[1..] } else { &rows[..] };
    if data_rows.is_empty() {
        return Err(Error::EmptyInput(format!("{path_str}: header only, no data rows")));
    }

    let d = width - 1;
    let mut features = Vec::with_capacity(data_rows.len() * d);
    let mut raw_labels = Vec::with_capacity(data_rows.len());
    for (r, rec) in data_rows.iter().enumerate() {
        let line = r + 1 + usize::from(header);
        if rec.len() != width {
            return Err(Error::Parse {
                path: path_str.clone(),
                line,
                message: format!("expected {width} cells, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            if c == label_idx {
                raw_labels.push(cell.trim().to_string());
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    path: path_str.clone(),
                    line,
                    message: format!("cell {c:?} = {cell:?} is not a number"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: path_str.clone(),
                        line,
                        message: format!("cell {c:?} = {cell:?} is not finite"),
                    });
                }
                features.push(v);
            }
        }
    }

    let (labels, names) = densify_labels(&raw_labels);
    if names.len() < 2 {
        return Err(Error::Validation(format!(
            "{path_str}: only one class present ({:?})",
            names[0]
        )));
    }

    let mut dataset = Dataset::new(
        features,
        d,
        labels,
        names.len(),
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "csv".into()),
    )?;
    dataset.normalize_minmax();
    dataset.set_label_names(Some(names));
    Ok(dataset)
}

/// Maps raw label strings to dense ids. All-numeric label sets sort
/// numerically so that e.g. "10" comes after "2".
fn densify_labels(raw: &[String]) -> (Vec<u32>, Vec<String>) {
    let mut distinct: Vec<String> = {
        let set: BTreeMap<&str, ()> = raw.iter().map(|s| (s.as_str(), ())).collect();
        set.into_keys().map(|s| s.to_string()).collect()
    };
    let all_numeric = distinct.iter().all(|s| s.parse::<u64>().is_ok());
    if all_numeric {
        distinct.sort_by_key(|s| s.parse::<u64>().unwrap());
    } else {
        distinct.sort();
    }
    let index: BTreeMap<&str, u32> = distinct
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i as u32))
        .collect();
    let labels = raw.iter().map(|s| index[s.as_str()]).collect();
    (labels, distinct)
}

/// Writes a dataset as CSV with header `label,f0,...`.
///
/// Feature values use the shortest representation that parses back to the
/// same f64, so a write/load round trip is exact up to re-normalization.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| Error::io(path.display().to_string(), e);

    write!(w, "label").map_err(io_err)?;
    for c in 0..dataset.d() {
        write!(w, ",f{c}").map_err(io_err)?;
    }
    writeln!(w).map_err(io_err)?;
    for i in 0..dataset.n() {
        write!(w, "{}", dataset.label_name(dataset.label(i))).map_err(io_err)?;
        for v in dataset.row(i) {
            write!(w, ",{v}").map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_headerless_numeric_csv() {
        let f = write_tmp("0.0,0.0,0\n1.0,0.5,1\n0.5,1.0,0\n0.25,0.75,1\n");
        let ds = load_csv(f.path(), &LabelColumn::Index(2)).unwrap();
        assert_eq!(ds.n(), 4);
        assert_eq!(ds.d(), 2);
        assert_eq!(ds.class_count(), 2);
        assert!(ds.is_unit_interval());
    }

    #[test]
    fn loads_header_by_name() {
        let f = write_tmp("x,y,class\n0.1,0.2,cat\n0.3,0.4,dog\n0.5,0.6,cat\n");
        let ds = load_csv(f.path(), &LabelColumn::Name("class".into())).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.label_names().unwrap(), &["cat".to_string(), "dog".to_string()]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let f = write_tmp("0.0,0.0,0\n1.0,oops,1\n");
        let err = load_csv(f.path(), &LabelColumn::Index(2)).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn single_class_file_is_rejected() {
        let f = write_tmp("0.0,0.0,a\n1.0,1.0,a\n");
        let err = load_csv(f.path(), &LabelColumn::Index(2)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn constant_column_normalizes_to_zero() {
        let f = write_tmp("3.5,0.0,a\n3.5,1.0,b\n3.5,2.0,a\n");
        let ds = load_csv(f.path(), &LabelColumn::Index(2)).unwrap();
        for i in 0..3 {
            assert_eq!(ds.row(i)[0], 0.0);
        }
    }

    #[test]
    fn numeric_label_names_sort_numerically() {
        let mut body = String::new();
        for i in 0..12 {
            body.push_str(&format!("{}.0,{}\n", i, i));
        }
        let f = write_tmp(&body);
        let ds = load_csv(f.path(), &LabelColumn::Index(1)).unwrap();
        let names = ds.label_names().unwrap();
        assert_eq!(names[2], "2");
        assert_eq!(names[10], "10");
    }

    #[test]
    fn round_trip_preserves_normalized_features_and_labels() {
        let f = write_tmp("x,y,class\n1.0,8.0,a\n5.0,2.0,b\n3.0,4.0,a\n2.0,6.0,b\n");
        let ds = load_csv(f.path(), &LabelColumn::Name("class".into())).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path()).unwrap();
        let back = load_csv(out.path(), &LabelColumn::Name("label".into())).unwrap();
        assert_eq!(back.labels(), ds.labels());
        for i in 0..ds.n() {
            for (a, b) in ds.row(i).iter().zip(back.row(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
