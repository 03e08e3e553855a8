//! Result tables: CSV rows plus JSON metadata.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::CUTOFF_MASS_THRESHOLD;

/// Truncation diagnostics carried by every row.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest top-shell mass among the Fock states behind the row.
    pub norm_at_cutoff: f64,
    /// Largest quadrature / propagation residual behind the row.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub values: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub experiment: String,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub weyl_modulus_exponent: f64,
    pub flagged_rows: usize,
    /// Scalar summaries (fitted slopes, maximal deviations, ...).
    pub summary: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(experiment: &str, columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            metadata: Metadata {
                experiment: experiment.to_string(),
                config_hash: String::new(),
                code_version: env!("CARGO_PKG_VERSION").to_string(),
                seed: 0,
                weyl_modulus_exponent: crate::vanhove::WEYL_MODULUS_EXPONENT,
                flagged_rows: 0,
                summary: BTreeMap::new(),
                notes: Vec::new(),
            },
        }
    }

    /// Appends a row; it is flagged when the top-shell mass exceeds 1%.
    pub fn push(&mut self, values: Vec<f64>, diagnostics: Diagnostics) {
        assert_eq!(
            values.len(),
            self.columns.len(),
            "row width differs from the header"
        );
        let flagged = diagnostics.norm_at_cutoff > CUTOFF_MASS_THRESHOLD
            || diagnostics.norm_at_cutoff.is_nan();
        if flagged {
            self.metadata.flagged_rows += 1;
        }
        self.rows.push(Row {
            values,
            diagnostics,
            flagged,
        });
    }

    pub fn any_flagged(&self) -> bool {
        self.rows.iter().any(|r| r.flagged)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    pub fn summary(&self, key: &str) -> Option<f64> {
        self.metadata.summary.get(key).copied()
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push_str(",norm_at_cutoff,residual,flagged\n");
        for r in &self.rows {
            let cells: Vec<String> = r.values.iter().map(|v| format!("{v:?}")).collect();
            out.push_str(&cells.join(","));
            out.push_str(&format!(
                ",{:?},{:?},{}\n",
                r.diagnostics.norm_at_cutoff, r.diagnostics.residual, r.flagged as u8
            ));
        }
        out
    }

    pub fn metadata_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.metadata)?)
    }

    /// Writes `<experiment>.csv` and `<experiment>.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{}.csv", self.metadata.experiment));
        let json = dir.join(format!("{}.json", self.metadata.experiment));
        std::fs::write(&csv, self.to_csv())?;
        std::fs::write(&json, self.metadata_json()?)?;
        Ok((csv, json))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_heavy_cutoff() {
        let mut t = ResultTable::new("demo", &["a", "b"]);
        t.push(vec![1.0, 2.0], Diagnostics::default());
        t.push(
            vec![1.0, f64::NAN],
            Diagnostics {
                norm_at_cutoff: 0.02,
                residual: 0.0,
            },
        );
        assert!(t.any_flagged());
        assert_eq!(t.metadata.flagged_rows, 1);
        let csv = t.to_csv();
        assert!(csv.starts_with("a,b,norm_at_cutoff,residual,flagged\n"));
        assert!(csv.contains("NaN"));
        assert_eq!(t.column("b").unwrap()[0], 2.0);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = ResultTable::new("demo", &["x"]);
        t.push(vec![0.5], Diagnostics::default());
        let (csv, json) = t.write(dir.path()).unwrap();
        assert!(std::fs::read_to_string(csv).unwrap().contains("0.5"));
        let meta: Metadata = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(meta.experiment, "demo");
    }
}
