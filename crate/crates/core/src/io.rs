//! CSV tables with a commented `# key=value` header and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Result, ZenoError};

/// A named column with its unit (empty for dimensionless).
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.to_string(),
            unit: unit.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem; the file is `<name>.csv`.
    pub name: String,
    pub description: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
    /// Extra `key=value` lines specific to this table.
    pub meta: Vec<(String, String)>,
}

impl Table {
    pub fn new(name: &str, description: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            name: name.to_string(),
            description: description.to_string(),
            columns: columns.iter().map(|(n, u)| Column::new(n, u)).collect(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(ZenoError::Argument(format!(
                "table {}: row has {} values, expected {}",
                self.name,
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c.name == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Render with the header block. Values use the shortest round-trip
    /// representation, so output is bit-reproducible.
    pub fn to_csv(&self, recipe: &str, config: &[(String, String)]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# recipe={recipe}");
        let _ = writeln!(s, "# table={}", self.name);
        let _ = writeln!(s, "# description={}", self.description);
        for (k, v) in config {
            let _ = writeln!(s, "# {k}={v}");
        }
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        for c in &self.columns {
            let unit = if c.unit.is_empty() { "1" } else { &c.unit };
            let _ = writeln!(s, "# unit.{}={unit}", c.name);
        }
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        let _ = writeln!(s, "{}", names.join(","));
        for r in &self.rows {
            let vals: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(s, "{}", vals.join(","));
        }
        s
    }
}

/// Parse a CSV written by [`Table::to_csv`]: header entries and rows.
/// Header pairs, column names and rows of a parsed table.
pub type ParsedCsv = (Vec<(String, String)>, Vec<String>, Vec<Vec<f64>>);

pub fn read_csv(text: &str) -> Result<ParsedCsv> {
    let mut header = Vec::new();
    let mut names = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# ") {
            if let Some((k, v)) = rest.split_once('=') {
                header.push((k.to_string(), v.to_string()));
            }
        } else if names.is_empty() {
            names = line.split(',').map(str::to_string).collect();
        } else if !line.is_empty() {
            let row = line
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|_| ZenoError::Argument(format!("bad value {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
    }
    Ok((header, names, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Record of one recipe run. Wall time is kept out of the output files, so
/// identical config and seed give identical digests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub recipe: String,
    pub code_version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn digests(&self) -> Vec<(&str, &str)> {
        self.outputs.iter().map(|o| (o.path.as_str(), o.sha256.as_str())).collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Write every table under `dir`, then the manifest (last).
pub fn write_run(
    dir: &Path,
    recipe: &str,
    seed: u64,
    config: &[(String, String)],
    tables: &[Table],
    wall_time_s: f64,
) -> Result<(RunManifest, PathBuf)> {
    fs::create_dir_all(dir)?;
    let mut outputs = Vec::with_capacity(tables.len());
    for t in tables {
        let text = t.to_csv(recipe, config);
        let file = format!("{}.csv", t.name);
        fs::write(dir.join(&file), &text)?;
        outputs.push(OutputFile {
            path: file,
            sha256: sha256_hex(text.as_bytes()),
            bytes: text.len(),
        });
    }
    let manifest = RunManifest {
        recipe: recipe.to_string(),
        code_version: CODE_VERSION.to_string(),
        seed,
        config: config.iter().cloned().collect(),
        wall_time_s,
        outputs,
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| ZenoError::Argument(format!("manifest serialization: {e}")))?;
    fs::write(&path, json)?;
    Ok((manifest, path))
}
