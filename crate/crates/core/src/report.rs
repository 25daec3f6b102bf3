//! Experiment reports and their JSON / CSV emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::measure::QuadratureSpec;
use crate::model::SpaceParams;

/// Suffix of the grid-sensitivity entry stored next to every constant.
pub const DELTA_SUFFIX: &str = ".grid_delta";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment_id: String,
    pub space: SpaceParams,
    pub lambda: Complex64,
    pub grids: Vec<QuadratureSpec>,
    pub constants_found: BTreeMap<String, f64>,
    pub pass: BTreeMap<String, bool>,
    pub seed: u64,
    pub runtime_ms: u64,
}

impl ExperimentReport {
    pub fn new(
        id: &str,
        space: SpaceParams,
        lambda: f64,
        grids: Vec<QuadratureSpec>,
        seed: u64,
    ) -> Self {
        Self {
            experiment_id: id.to_string(),
            space,
            lambda: Complex64::new(lambda, 0.0),
            grids,
            constants_found: BTreeMap::new(),
            pass: BTreeMap::new(),
            seed,
            runtime_ms: 0,
        }
    }

    /// Records `name` and its grid-sensitivity delta.
    pub fn constant(&mut self, name: &str, value: f64, delta: f64) {
        self.constants_found.insert(name.to_string(), value);
        self.constants_found
            .insert(format!("{name}{DELTA_SUFFIX}"), delta);
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.pass.insert(name.to_string(), ok);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants_found.get(name).copied()
    }

    pub fn passed(&self, name: &str) -> Option<bool> {
        self.pass.get(name).copied()
    }

    /// Every criterion passed.
    pub fn all_passed(&self) -> bool {
        self.pass.values().all(|&v| v)
    }

    /// Names of the criteria that failed.
    pub fn failures(&self) -> Vec<&str> {
        self.pass
            .iter()
            .filter(|(_, &v)| !v)
            .map(|(k, _)| k.as_str())
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// A data file of an experiment: a header and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|v| format!("{v:.16e}")))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A report with its data tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub tables: Vec<Table>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    CsvBundle,
}

/// Writes `<dir>/<id>.report.json` or `<dir>/<id>.<table>.csv`, returning the paths.
pub fn emit_report(
    out: &ExperimentOutput,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let id = &out.report.experiment_id;
    let mut written = Vec::new();
    match format {
        ReportFormat::Json => {
            let path = dir.join(format!("{id}.report.json"));
            fs::write(&path, out.report.to_json()?)?;
            written.push(path);
        }
        ReportFormat::CsvBundle => {
            for t in &out.tables {
                let path = dir.join(format!("{id}.{}.csv", t.name));
                t.write(fs::File::create(&path)?)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
