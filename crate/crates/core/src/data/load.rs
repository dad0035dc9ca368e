use std::collections::HashMap;
use std::path::Path;

use super::{Dataset, FeatureRecord, SplitTag};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub label_column: String,
    pub subject_column: String,
    pub view_column: String,
    /// Cell contents (compared case-insensitively after trimming) that mean "missing".
    /// The empty cell is always missing.
    pub missing_tokens: Vec<String>,
    pub split: SplitTag,
    /// Set when the file already holds normalized values.
    pub normalized: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            label_column: "label".into(),
            subject_column: "subject_id".into(),
            view_column: "view".into(),
            missing_tokens: vec!["NA".into(), "NaN".into()],
            split: SplitTag::Train,
            normalized: false,
        }
    }
}

impl LoadOptions {
    pub fn with_split(mut self, split: SplitTag) -> Self {
        self.split = split;
        self
    }

    fn is_missing(&self, cell: &str) -> bool {
        cell.is_empty() || self.missing_tokens.iter().any(|t| t.eq_ignore_ascii_case(cell))
    }
}

/// Reads a CSV with one row per subject. Columns may appear in any order;
/// records are stored in `schema` order with raw (un-normalized) values and
/// missing cells encoded as `known = false`, `value = 0`.
pub fn load_dataset(path: impl AsRef<Path>, schema: &[String], opts: &LoadOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(file, schema, opts)
}

pub(crate) fn read_dataset<R: std::io::Read>(reader: R, schema: &[String], opts: &LoadOptions) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let feature_pos: HashMap<&str, usize> = schema.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut column_to_feature = vec![None; header.len()];
    let mut label_col = None;
    let mut subject_col = None;
    let mut view_col = None;
    let mut unknown = Vec::new();
    for (c, name) in header.iter().enumerate() {
        if let Some(&f) = feature_pos.get(name.as_str()) {
            column_to_feature[c] = Some(f);
        } else if *name == opts.label_column {
            label_col = Some(c);
        } else if *name == opts.subject_column {
            subject_col = Some(c);
        } else if *name == opts.view_column {
            view_col = Some(c);
        } else {
            unknown.push(name.clone());
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownColumns(unknown));
    }
    let mut missing: Vec<String> = schema
        .iter()
        .enumerate()
        .filter(|(f, _)| !column_to_feature.contains(&Some(*f)))
        .map(|(_, n)| n.clone())
        .collect();
    if label_col.is_none() {
        missing.push(opts.label_column.clone());
    }
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    let label_col = label_col.unwrap_or_default();

    let dim = schema.len();
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let row_no = i + 1;
        let mut values = vec![0.0; dim];
        let mut known = vec![false; dim];
        for (c, cell) in row.iter().enumerate() {
            let Some(f) = column_to_feature[c] else { continue };
            let cell = cell.trim();
            if opts.is_missing(cell) {
                continue;
            }
            let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::MalformedCell {
                row: row_no,
                column: header[c].clone(),
                value: cell.to_string(),
            })?;
            values[f] = v;
            known[f] = true;
        }
        let label_cell = row.get(label_col).unwrap_or("").trim();
        let label = match label_cell.parse::<f64>() {
            Ok(0.0) => 0,
            Ok(1.0) => 1,
            _ => {
                return Err(Error::NonBinaryLabel {
                    row: row_no,
                    value: label_cell.to_string(),
                })
            }
        };
        let subject_id = subject_col
            .and_then(|c| row.get(c))
            .map(|s| s.trim().to_string())
            .unwrap_or_else(|| format!("row-{row_no}"));
        let view = view_col
            .and_then(|c| row.get(c))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        records.push(FeatureRecord {
            subject_id,
            values,
            known,
            label,
            view,
        });
    }
    Dataset::new(schema.to_vec(), records, opts.split, opts.normalized)
}

/// Writes a dataset in the layout [`load_dataset`] reads. Missing values become empty cells.
pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(ds, file)
}

pub(crate) fn write_dataset_to<W: std::io::Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let has_view = ds.records.iter().any(|r| r.view.is_some());
    let mut header = vec!["subject_id".to_string()];
    if has_view {
        header.push("view".into());
    }
    header.extend(ds.feature_names.iter().cloned());
    header.push("label".into());
    w.write_record(&header)?;
    for r in &ds.records {
        let mut row = vec![r.subject_id.clone()];
        if has_view {
            row.push(r.view.clone().unwrap_or_default());
        }
        row.extend(
            r.values
                .iter()
                .zip(&r.known)
                .map(|(v, &k)| if k { v.to_string() } else { String::new() }),
        );
        row.push(r.label.to_string());
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<String> {
        vec!["a".into(), "b".into(), "c".into()]
    }

    fn read(text: &str) -> Result<Dataset> {
        read_dataset(text.as_bytes(), &schema(), &LoadOptions::default())
    }

    #[test]
    fn reorders_columns_and_encodes_missing() {
        let ds = read("c,label,a,b,subject_id\n3,1,1,,s1\nna,0,NaN,2.5,s2\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.records[0].values, vec![1.0, 0.0, 3.0]);
        assert_eq!(ds.records[0].known, vec![true, false, true]);
        assert_eq!(ds.records[1].known, vec![false, true, false]);
        assert_eq!(ds.records[1].subject_id, "s2");
        assert_eq!(ds.positives(), 1);
    }

    #[test]
    fn fully_missing_row() {
        let ds = read("a,b,c,label\n,,,0\n").unwrap();
        assert_eq!(ds.records[0].known, vec![false; 3]);
        assert_eq!(ds.records[0].values, vec![0.0; 3]);
        assert_eq!(ds.records[0].subject_id, "row-1");
    }

    #[test]
    fn malformed_cell_names_row_and_column() {
        let err = read("a,b,c,label\n1,2,3,0\n1,x,3,1\n").unwrap_err();
        match err {
            Error::MalformedCell { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_and_missing_columns() {
        match read("a,b,c,zzz,label\n1,2,3,4,0\n").unwrap_err() {
            Error::UnknownColumns(cols) => assert_eq!(cols, vec!["zzz".to_string()]),
            other => panic!("unexpected {other}"),
        }
        match read("a,b,label\n1,2,0\n").unwrap_err() {
            Error::MissingColumns(cols) => assert_eq!(cols, vec!["c".to_string()]),
            other => panic!("unexpected {other}"),
        }
        assert!(matches!(read("a,b,c\n1,2,3\n").unwrap_err(), Error::MissingColumns(_)));
    }

    #[test]
    fn non_binary_label() {
        assert!(matches!(
            read("a,b,c,label\n1,2,3,2\n").unwrap_err(),
            Error::NonBinaryLabel { row: 1, .. }
        ));
    }

    #[test]
    fn write_then_read_preserves_records() {
        let ds = read("view,a,b,c,label,subject_id\nPA,1.5,,3,1,x\nAP,,2,,0,y\n").unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&ds, &mut buf).unwrap();
        let back = read_dataset(buf.as_slice(), &schema(), &LoadOptions::default()).unwrap();
        assert_eq!(ds, back);
    }
}
