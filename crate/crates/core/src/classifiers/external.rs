//! Externally produced prediction files.
//!
//! Lets models trained outside the toolkit (e.g. deep networks) be scored:
//! predictions are joined against an exported augmented set by
//! (parent_index, sample_ordinal), where ordinal 0 is the clean point and
//! 1..=k are its corruptions.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Predicted labels keyed by (parent_index, sample_ordinal).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    map: BTreeMap<(u64, u32), u32>,
}

/// Loads a prediction CSV with columns
/// `parent_index,sample_ordinal,predicted_label` (header optional).
/// Row order does not matter; duplicate keys are an error.
pub fn load_external_predictions(path: impl AsRef<Path>) -> Result<PredictionTable> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Format(format!("{path_str}: {e}")))?;

    let mut map = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            path: path_str.clone(),
            line,
            message: e.to_string(),
        })?;
        if line == 1 && rec.iter().any(|c| c.trim().parse::<u64>().is_err()) {
            continue; // header row
        }
        if rec.len() != 3 {
            return Err(Error::Parse {
                path: path_str.clone(),
                line,
                message: format!("expected 3 cells, found {}", rec.len()),
            });
        }
        let parse = |c: usize, what: &str| -> Result<u64> {
            rec[c].trim().parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                line,
                message: format!("{what} {:?} is not a non-negative integer", &rec[c]),
            })
        };
        let parent = parse(0, "parent_index")?;
        let ordinal = parse(1, "sample_ordinal")? as u32;
        let label = parse(2, "predicted_label")? as u32;
        if map.insert((parent, ordinal), label).is_some() {
            return Err(Error::Validation(format!(
                "{path_str}: duplicate prediction for parent {parent}, ordinal {ordinal}"
            )));
        }
    }
    if map.is_empty() {
        return Err(Error::EmptyInput(format!("{path_str}: no prediction rows")));
    }
    Ok(PredictionTable { map })
}

impl PredictionTable {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, parent: u64, ordinal: u32) -> Option<u32> {
        self.map.get(&(parent, ordinal)).copied()
    }

    /// Joins against the expected identifiers, in their order. Missing rows
    /// are an error naming the gaps (first few listed).
    pub fn join(&self, expected: &[(u64, u32)]) -> Result<Vec<u32>> {
        let mut out = Vec::with_capacity(expected.len());
        let mut missing = Vec::new();
        for &(parent, ordinal) in expected {
            match self.get(parent, ordinal) {
                Some(label) => out.push(label),
                None => missing.push((parent, ordinal)),
            }
        }
        if !missing.is_empty() {
            let shown: Vec<String> = missing
                .iter()
                .take(10)
                .map(|(p, o)| format!("({p}, {o})"))
                .collect();
            let suffix = if missing.len() > 10 {
                format!(" and {} more", missing.len() - 10)
            } else {
                String::new()
            };
            return Err(Error::Validation(format!(
                "predictions missing for {} identifiers: {}{suffix}",
                missing.len(),
                shown.join(", ")
            )));
        }
        Ok(out)
    }

    /// Identifiers present but not expected (stale or foreign rows).
    pub fn unknown_keys(&self, expected: &[(u64, u32)]) -> Vec<(u64, u32)> {
        let known: std::collections::BTreeSet<(u64, u32)> = expected.iter().copied().collect();
        self.map
            .keys()
            .filter(|k| !known.contains(k))
            .copied()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn complete_file_joins_in_expected_order() {
        let f = write_tmp(
            "parent_index,sample_ordinal,predicted_label\n0,0,1\n0,1,1\n1,0,0\n1,1,1\n2,0,0\n2,1,0\n3,0,1\n3,1,0\n4,0,1\n4,1,1\n",
        );
        let table = load_external_predictions(f.path()).unwrap();
        assert_eq!(table.len(), 10);
        let expected: Vec<(u64, u32)> = (0..5).flat_map(|p| [(p, 0), (p, 1)]).collect();
        let joined = table.join(&expected).unwrap();
        assert_eq!(joined, vec![1, 1, 0, 1, 0, 0, 1, 0, 1, 1]);
    }

    #[test]
    fn missing_row_names_the_identifier() {
        let f = write_tmp("0,0,1\n2,0,0\n");
        let table = load_external_predictions(f.path()).unwrap();
        let err = table.join(&[(0, 0), (1, 0), (2, 0)]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(1, 0)"), "message was: {msg}");
    }

    #[test]
    fn shuffled_file_joins_identically() {
        let ordered = write_tmp("0,0,1\n0,1,0\n1,0,1\n");
        let shuffled = write_tmp("1,0,1\n0,1,0\n0,0,1\n");
        let expected = [(0, 0), (0, 1), (1, 0)];
        let a = load_external_predictions(ordered.path()).unwrap();
        let b = load_external_predictions(shuffled.path()).unwrap();
        assert_eq!(a.join(&expected).unwrap(), b.join(&expected).unwrap());
    }

    #[test]
    fn duplicate_rows_are_rejected() {
        let f = write_tmp("0,0,1\n0,0,2\n");
        assert!(matches!(
            load_external_predictions(f.path()),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn unknown_keys_are_reported() {
        let f = write_tmp("0,0,1\n9,9,1\n");
        let table = load_external_predictions(f.path()).unwrap();
        assert_eq!(table.unknown_keys(&[(0, 0)]), vec![(9, 9)]);
    }
}
