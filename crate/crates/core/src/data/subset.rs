use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Dataset, SUBSET_A, SUBSET_B};
use crate::error::{Error, Result};

/// A named set of input features.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSubset {
    pub name: String,
    pub indices: BTreeSet<usize>,
}

impl InputSubset {
    /// Resolves feature names against a schema.
    pub fn from_names<S: AsRef<str>>(name: &str, names: &[S], schema: &[String]) -> Result<Self> {
        let mut indices = BTreeSet::new();
        for n in names {
            let n = n.as_ref();
            let i = schema
                .iter()
                .position(|s| s == n)
                .ok_or_else(|| Error::InvalidConfig(format!("subset {name}: unknown feature `{n}`")))?;
            indices.insert(i);
        }
        if indices.is_empty() {
            return Err(Error::InvalidConfig(format!("subset {name} is empty")));
        }
        Ok(InputSubset {
            name: name.to_string(),
            indices,
        })
    }

    pub fn subset_a(schema: &[String]) -> Result<Self> {
        Self::from_names("A", &SUBSET_A, schema)
    }

    pub fn subset_b(schema: &[String]) -> Result<Self> {
        Self::from_names("B", &SUBSET_B, schema)
    }

    pub fn all(dim: usize) -> Self {
        InputSubset {
            name: "all".into(),
            indices: (0..dim).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.contains(&i)
    }
}

/// Hides every feature outside `subset`. With `require_complete`, records
/// missing any in-subset feature are dropped.
pub fn restrict_to_subset(ds: &Dataset, subset: &InputSubset, require_complete: bool) -> Result<Dataset> {
    if let Some(&bad) = subset.indices.iter().find(|&&i| i >= ds.dim()) {
        return Err(Error::InvalidConfig(format!(
            "subset {} index {bad} out of range for {} features",
            subset.name,
            ds.dim()
        )));
    }
    let mut out = ds.clone();
    out.records.retain(|r| !require_complete || subset.indices.iter().all(|&i| r.known[i]));
    for r in &mut out.records {
        for i in 0..r.values.len() {
            if !subset.contains(i) {
                r.known[i] = false;
                r.values[i] = 0.0;
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyResult(format!("no records left after restricting to subset {}", subset.name)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{default_schema, FeatureRecord, SplitTag};

    fn ds() -> Dataset {
        let rows = [
            (vec![Some(1.0), Some(2.0), Some(3.0)], 1),
            (vec![Some(1.0), None, Some(3.0)], 0),
            (vec![None, Some(2.0), Some(3.0)], 1),
        ];
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (v, l))| FeatureRecord {
                subject_id: i.to_string(),
                values: v.iter().map(|x| x.unwrap_or(0.0)).collect(),
                known: v.iter().map(Option::is_some).collect(),
                label: *l,
                view: None,
            })
            .collect();
        Dataset::new(vec!["a".into(), "b".into(), "c".into()], records, SplitTag::Test, false).unwrap()
    }

    #[test]
    fn full_subset_is_identity() {
        let d = ds();
        assert_eq!(restrict_to_subset(&d, &InputSubset::all(3), false).unwrap(), d);
    }

    #[test]
    fn complete_case_filter() {
        let d = ds();
        let s = InputSubset::from_names("x", &["a", "c"], &d.feature_names).unwrap();
        let r = restrict_to_subset(&d, &s, true).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.records.iter().all(|rec| !rec.known[1] && rec.values[1] == 0.0));
        let loose = restrict_to_subset(&d, &s, false).unwrap();
        assert_eq!(loose.len(), 3);
    }

    #[test]
    fn empty_result_is_error() {
        let d = ds();
        let s = InputSubset::from_names("x", &["a", "b"], &d.feature_names).unwrap();
        let only_missing = restrict_to_subset(&d.select(&[1, 2], SplitTag::Test), &s, true);
        assert!(matches!(only_missing, Err(Error::EmptyResult(_))));
    }

    #[test]
    fn predefined_subsets_resolve() {
        let schema = default_schema();
        let a = InputSubset::subset_a(&schema).unwrap();
        let b = InputSubset::subset_b(&schema).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(b.len(), 7);
        let crp = schema.iter().position(|n| n == "C-Reactive Protein").unwrap();
        assert!(a.contains(crp) && b.contains(crp) && a.contains(27) && b.contains(27));
        assert!(InputSubset::from_names("bad", &["nope"], &schema).is_err());
    }
}
