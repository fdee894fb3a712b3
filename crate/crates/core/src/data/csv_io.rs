//! CSV ingestion and export. A header row is required; features are
//! decimal-point reals, the label column holds class indices, class names
//! (mapped to indices in sorted order) or real regression targets.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Dataset, Label, Provenance};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LabelKind {
    /// Class indices or class names.
    Class,
    /// Real-valued regression targets.
    Target,
}

#[derive(Clone, Debug)]
pub struct CsvSchema {
    pub label_column: String,
    /// Feature columns in order; `None` means every non-label column,
    /// in header order.
    pub feature_columns: Option<Vec<String>>,
    pub label_kind: LabelKind,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            label_column: "label".into(),
            feature_columns: None,
            label_kind: LabelKind::Class,
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| malformed(&path_str, 1, &e.to_string()))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(&path_str, 1, &e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    let label_idx = headers
        .iter()
        .position(|h| *h == schema.label_column)
        .ok_or_else(|| {
            malformed(
                &path_str,
                1,
                &format!("label column {:?} not found in header", schema.label_column),
            )
        })?;

    let feature_idx: Vec<usize> = match &schema.feature_columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                headers.iter().position(|h| h == c).ok_or_else(|| {
                    malformed(&path_str, 1, &format!("feature column {c:?} not found"))
                })
            })
            .collect::<Result<_>>()?,
        None => (0..headers.len()).filter(|&i| i != label_idx).collect(),
    };
    if feature_idx.is_empty() {
        return Err(malformed(&path_str, 1, "no feature columns"));
    }

    let mut features: Vec<f64> = Vec::new();
    let mut raw_labels: Vec<(u64, String)> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row as u64 + 2; // header is line 1
        let record = record.map_err(|e| malformed(&path_str, line, &e.to_string()))?;
        for &fi in &feature_idx {
            let cell = record.get(fi).ok_or_else(|| {
                malformed(&path_str, line, &format!("missing column {}", headers[fi]))
            })?;
            let value: f64 = cell.trim().parse().map_err(|_| {
                malformed(
                    &path_str,
                    line,
                    &format!("non-numeric feature {:?} in column {}", cell, headers[fi]),
                )
            })?;
            if !value.is_finite() {
                return Err(malformed(&path_str, line, "non-finite feature value"));
            }
            features.push(value);
        }
        let label_cell = record
            .get(label_idx)
            .ok_or_else(|| malformed(&path_str, line, "missing label column"))?;
        raw_labels.push((line, label_cell.trim().to_string()));
    }

    if raw_labels.is_empty() {
        return Err(malformed(&path_str, 1, "no data rows (header only)"));
    }

    let labels = parse_labels(&path_str, &raw_labels, schema.label_kind)?;
    let n = labels.len();
    let ids: Vec<u64> = (0..n as u64).collect();
    Dataset::new(
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "csv".into()),
        Provenance::Csv,
        feature_idx.len(),
        features,
        labels,
        ids,
    )
}

fn parse_labels(
    path: &str,
    raw: &[(u64, String)],
    kind: LabelKind,
) -> Result<Vec<Label>> {
    match kind {
        LabelKind::Target => raw
            .iter()
            .map(|(line, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|t| t.is_finite())
                    .map(Label::Target)
                    .ok_or_else(|| malformed(path, *line, &format!("bad target {s:?}")))
            })
            .collect(),
        LabelKind::Class => {
            let all_ints = raw.iter().all(|(_, s)| s.parse::<usize>().is_ok());
            if all_ints {
                return Ok(raw
                    .iter()
                    .map(|(_, s)| Label::Class(s.parse().unwrap()))
                    .collect());
            }
            // Any non-integer label switches the whole column to name mode,
            // but numeric-looking strings like "1.5" are rejected: they are
            // almost always a schema mistake rather than a class name.
            if let Some((line, s)) = raw.iter().find(|(_, s)| s.parse::<f64>().is_ok()) {
                return Err(malformed(
                    path,
                    *line,
                    &format!("unknown label class {s:?} (not an index or name)"),
                ));
            }
            let mut names: Vec<&str> = raw.iter().map(|(_, s)| s.as_str()).collect();
            names.sort_unstable();
            names.dedup();
            let index: BTreeMap<&str, usize> =
                names.iter().enumerate().map(|(i, s)| (*s, i)).collect();
            Ok(raw
                .iter()
                .map(|(_, s)| Label::Class(index[s.as_str()]))
                .collect())
        }
    }
}

/// Write a dataset as CSV with columns `f0..f{d-1},label`. Floats use the
/// shortest representation that round-trips, so `load_csv(save_csv(ds))`
/// reproduces the features bit for bit.
pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    let d = dataset.input_dim();
    for j in 0..d {
        write!(w, "f{j},")?;
    }
    writeln!(w, "label")?;
    for i in 0..dataset.len() {
        for x in dataset.feature_row(i) {
            write!(w, "{x},")?;
        }
        match dataset.labels()[i] {
            Label::Class(c) => writeln!(w, "{c}")?,
            Label::Target(t) => writeln!(w, "{t}")?,
        }
    }
    w.flush()?;
    Ok(())
}

fn malformed(path: &str, line: u64, msg: &str) -> Error {
    Error::Malformed {
        path: path.to_string(),
        line,
        msg: msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn three_rows_two_features() {
        let f = write_tmp("a,b,label\n1.0,2.0,0\n3.5,-1.0,1\n0.25,0.5,0\n");
        let ds = load_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.input_dim(), 2);
        assert_eq!(ds.feature_row(1), &[3.5, -1.0]);
        assert_eq!(ds.labels()[1], Label::Class(1));
        assert_eq!(ds.ids(), &[0, 1, 2]);
    }

    #[test]
    fn header_only_rejected() {
        let f = write_tmp("a,b,label\n");
        let err = load_csv(f.path(), &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains("header only"), "{err}");
    }

    #[test]
    fn ragged_row_reports_line() {
        let f = write_tmp("a,b,label\n1,2,0\n3,4\n");
        let err = load_csv(f.path(), &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
    }

    #[test]
    fn non_numeric_feature_reports_line() {
        let f = write_tmp("a,b,label\n1,2,0\nx,4,1\n");
        let err = load_csv(f.path(), &CsvSchema::default()).unwrap_err();
        assert!(err.to_string().contains(":3:"), "{err}");
        assert!(err.to_string().contains("non-numeric"), "{err}");
    }

    #[test]
    fn string_class_names_sorted() {
        let f = write_tmp("a,label\n1,dog\n2,cat\n3,dog\n4,ant\n");
        let ds = load_csv(f.path(), &CsvSchema::default()).unwrap();
        // sorted order: ant=0, cat=1, dog=2
        let got: Vec<usize> = ds.labels().iter().map(|l| l.as_class().unwrap()).collect();
        assert_eq!(got, vec![2, 1, 2, 0]);
    }

    #[test]
    fn fractional_class_label_rejected() {
        let f = write_tmp("a,label\n1,0\n2,1.5\n");
        assert!(load_csv(f.path(), &CsvSchema::default()).is_err());
    }

    #[test]
    fn regression_targets() {
        let schema = CsvSchema {
            label_kind: LabelKind::Target,
            ..CsvSchema::default()
        };
        let f = write_tmp("a,label\n1,0.5\n2,-3.25\n");
        let ds = load_csv(f.path(), &schema).unwrap();
        assert_eq!(ds.labels()[1], Label::Target(-3.25));
    }

    #[test]
    fn custom_feature_columns() {
        let schema = CsvSchema {
            feature_columns: Some(vec!["b".into()]),
            ..CsvSchema::default()
        };
        let f = write_tmp("a,b,label\n9,1,0\n9,2,1\n");
        let ds = load_csv(f.path(), &schema).unwrap();
        assert_eq!(ds.input_dim(), 1);
        assert_eq!(ds.feature_row(1), &[2.0]);
    }
}
