use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::stats::util::distinct_count;

/// Sample-size floor below which results carry a warning.
pub const RECOMMENDED_MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub is_integer_valued: bool,
    pub cardinality: usize,
    pub flagged_circular: bool,
}

/// Column-major sample matrix with per-variable metadata.
#[derive(Debug, Clone)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    meta: Vec<VariableMeta>,
}

impl Dataset {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::MalformedData(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::MalformedData(format!("duplicate column `{name}`")));
            }
        }
        let n = columns.first().map_or(0, Vec::len);
        let mut meta = Vec::with_capacity(columns.len());
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::MalformedData(format!(
                    "column `{name}` has {} rows, expected {n}",
                    col.len()
                )));
            }
            if let Some(row) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::MalformedData(format!(
                    "column `{name}` row {} is not a finite number",
                    row + 1
                )));
            }
            let cardinality = distinct_count(col);
            if cardinality < 2 {
                return Err(Error::MalformedData(format!(
                    "column `{name}` has fewer than 2 distinct values"
                )));
            }
            meta.push(VariableMeta {
                is_integer_valued: col.iter().all(|v| v.fract() == 0.0),
                cardinality,
                flagged_circular: false,
            });
        }
        Ok(Dataset {
            names,
            columns,
            meta,
        })
    }

    /// Headered CSV, one column per variable.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        if names.is_empty() || names.iter().all(String::is_empty) {
            return Err(Error::MalformedData("missing header row".into()));
        }
        let mut columns = vec![Vec::new(); names.len()];
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::MalformedData(e.to_string()))?;
            for (c, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().map_err(|_| {
                    Error::MalformedData(format!(
                        "row {} column `{}`: `{field}` is not a number",
                        row + 1,
                        names[c]
                    ))
                })?;
                columns[c].push(v);
            }
        }
        Self::new(names, columns)
    }

    pub fn n_samples(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, v: usize) -> &[f64] {
        &self.columns[v]
    }

    pub fn meta(&self, v: usize) -> &VariableMeta {
        &self.meta[v]
    }

    /// Mark named variables as circular (angles, phases, times of day).
    pub fn flag_circular(&mut self, names: &[String]) -> Result<()> {
        for name in names {
            let v = self
                .index_of(name)
                .ok_or_else(|| Error::UnknownVariable(name.clone()))?;
            self.meta[v].flagged_circular = true;
        }
        Ok(())
    }

    /// Warning text when the sample is below `min`.
    pub fn sample_size_warning(&self, min: usize) -> Option<String> {
        (self.n_samples() < min).then(|| {
            format!(
                "dataset has {} samples; results below {min} are unreliable",
                self.n_samples()
            )
        })
    }

    /// Content hash used to bind persisted sessions to their data.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (name, col) in self.names.iter().zip(&self.columns) {
            h.update(name.as_bytes());
            h.update([0u8]);
            for v in col {
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_csv_and_metadata() {
        let csv = "a, b ,c\n1,0.5,3\n2,1.5,3.5\n1,2.5,4\n";
        let d = Dataset::from_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(d.names(), ["a", "b", "c"]);
        assert_eq!(d.n_samples(), 3);
        assert!(d.meta(0).is_integer_valued);
        assert_eq!(d.meta(0).cardinality, 2);
        assert!(!d.meta(1).is_integer_valued);
        assert_eq!(d.index_of("c"), Some(2));
    }

    #[test]
    fn rejects_missing_and_constant_columns() {
        assert!(matches!(
            Dataset::from_csv_reader("a,b\n1,\n2,3\n".as_bytes()),
            Err(Error::MalformedData(_))
        ));
        assert!(matches!(
            Dataset::from_csv_reader("a,b\n1,2\n1,3\n".as_bytes()),
            Err(Error::MalformedData(_))
        ));
        assert!(matches!(
            Dataset::from_csv_reader("a,b\n1,2\n3\n".as_bytes()),
            Err(Error::MalformedData(_))
        ));
        assert!(Dataset::from_csv_reader("a,a\n1,2\n2,3\n".as_bytes()).is_err());
    }

    #[test]
    fn small_samples_warn() {
        let d = Dataset::from_csv_reader("a\n1\n2\n".as_bytes()).unwrap();
        assert!(d.sample_size_warning(RECOMMENDED_MIN_SAMPLES).is_some());
        assert!(d.sample_size_warning(2).is_none());
    }

    #[test]
    fn circular_flag_and_fingerprint() {
        let mut d = Dataset::from_csv_reader("a,b\n1,2\n2,3\n".as_bytes()).unwrap();
        let before = d.fingerprint();
        d.flag_circular(&["b".into()]).unwrap();
        assert!(d.meta(1).flagged_circular);
        assert!(d.flag_circular(&["zz".into()]).is_err());
        assert_eq!(before, d.fingerprint());
        assert_eq!(before.len(), 64);
    }
}
