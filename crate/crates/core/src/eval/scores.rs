use std::path::Path;

use crate::error::{Error, Result};
use crate::masking::MaskedEvalSet;

/// Raw per-sample scores of several models on one evaluation set. This is
/// the score dump every report can be recomputed from.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreTable {
    pub sample_ids: Vec<String>,
    pub combination_ids: Vec<u32>,
    pub lengths: Vec<usize>,
    pub labels: Vec<u8>,
    pub models: Vec<String>,
    /// `scores[model][sample]`.
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTable {
    pub fn for_eval_set(set: &MaskedEvalSet) -> Self {
        let entries = set.entries();
        ScoreTable {
            sample_ids: entries
                .iter()
                .map(|e| set.dataset.records[e.record as usize].subject_id.clone())
                .collect(),
            combination_ids: entries.iter().map(|e| e.combo).collect(),
            lengths: set.lengths(),
            labels: set.labels(),
            models: Vec::new(),
            scores: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn push_model(&mut self, name: impl Into<String>, scores: Vec<f64>) -> Result<()> {
        if scores.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: scores.len(),
            });
        }
        self.models.push(name.into());
        self.scores.push(scores);
        Ok(())
    }

    pub fn model_scores(&self, name: &str) -> Option<&[f64]> {
        self.models.iter().position(|m| m == name).map(|i| self.scores[i].as_slice())
    }

    pub fn write_csv_to<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        let mut header = vec!["sample_id".to_string(), "combination_id".into(), "length".into(), "label".into()];
        header.extend(self.models.iter().cloned());
        w.write_record(&header)?;
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.len() {
            row.clear();
            row.push(self.sample_ids[i].clone());
            row.push(self.combination_ids[i].to_string());
            row.push(self.lengths[i].to_string());
            row.push(self.labels[i].to_string());
            row.extend(self.scores.iter().map(|s| s[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<score dump>", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(f))
    }

    pub fn read_csv_from<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.len() < 4 || header[..4] != ["sample_id", "combination_id", "length", "label"] {
            return Err(Error::InvalidDataset("score dump header must start with sample_id,combination_id,length,label".into()));
        }
        let models: Vec<String> = header[4..].to_vec();
        let mut t = ScoreTable {
            sample_ids: Vec::new(),
            combination_ids: Vec::new(),
            lengths: Vec::new(),
            labels: Vec::new(),
            scores: vec![Vec::new(); models.len()],
            models,
        };
        for (row_idx, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let num = |c: usize| -> Result<f64> {
                rec[c].parse::<f64>().map_err(|_| Error::MalformedCell {
                    row: row_idx + 1,
                    column: header[c].clone(),
                    value: rec[c].to_string(),
                })
            };
            t.sample_ids.push(rec[0].to_string());
            t.combination_ids.push(num(1)? as u32);
            t.lengths.push(num(2)? as usize);
            t.labels.push(num(3)? as u8);
            for m in 0..t.models.len() {
                t.scores[m].push(num(4 + m)?);
            }
        }
        Ok(t)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv_from(std::io::BufReader::new(f))
    }
}
