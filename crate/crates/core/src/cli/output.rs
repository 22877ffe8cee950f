//! CSV and JSON serialization with provenance headers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{CliError, ExperimentConfig};
use crate::montecarlo::{IdsCurve, IdsPoint};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Shortest decimal that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// Provenance shared by every file of one run.
#[derive(Debug, Clone)]
pub struct RunHeader {
    pub command: String,
    pub seed: u64,
    pub config_json: String,
    /// Mask bits on one line, when a base set was used.
    pub mask: Option<String>,
}

impl RunHeader {
    pub fn new(command: &str, config: &ExperimentConfig, mask: Option<String>) -> Self {
        Self { command: command.to_string(), seed: config.seed, config_json: config.resolved().to_json(), mask }
    }

    pub fn comment_lines(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# tool: {TOOL_VERSION}").unwrap();
        writeln!(s, "# command: {}", self.command).unwrap();
        writeln!(s, "# seed: {}", self.seed).unwrap();
        writeln!(s, "# config: {}", self.config_json).unwrap();
        if let Some(mask) = &self.mask {
            writeln!(s, "# mask: {mask}").unwrap();
        }
        s
    }
}

/// In-memory CSV with a provenance header.
pub struct CsvTable {
    text: String,
    columns: usize,
}

impl CsvTable {
    pub fn new(header: &RunHeader, columns: &[&str]) -> Self {
        let mut text = header.comment_lines();
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text, columns: columns.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "row width");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[derive(Serialize)]
struct JsonDocument<'a, T: Serialize> {
    tool: &'static str,
    command: &'a str,
    seed: u64,
    config: serde_json::Value,
    result: &'a T,
}

pub fn json_document<T: Serialize>(header: &RunHeader, result: &T) -> String {
    let doc = JsonDocument {
        tool: TOOL_VERSION,
        command: &header.command,
        seed: header.seed,
        config: serde_json::from_str(&header.config_json).expect("valid config json"),
        result,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("result serializes");
    s.push('\n');
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| CliError::Io { path: path.clone(), source })?;
    Ok(path)
}

pub fn ids_table(header: &RunHeader, curve: &IdsCurve) -> String {
    let mut t = CsvTable::new(header, &["energy", "estimate", "stderr", "samples"]);
    for p in &curve.points {
        t.row(&[float(p.energy), float(p.estimate), float(p.stderr), curve.samples.to_string()]);
    }
    t.into_string()
}

/// Reads an IDS CSV; every point is attributed to box half-length `half_length`.
pub fn parse_ids_csv(text: &str, dimension: usize, half_length: usize) -> Result<IdsCurve, String> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or("missing header line")?;
    if header != "energy,estimate,stderr,samples" {
        return Err(format!("unexpected header `{header}`"));
    }
    let mut points = Vec::new();
    let mut samples = 0;
    for (i, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(format!("row {}: expected 4 columns", i + 1));
        }
        let num = |k: usize| cells[k].parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
        points.push(IdsPoint { energy: num(0)?, estimate: num(1)?, stderr: num(2)?, half_length });
        samples = cells[3].parse::<u64>().map_err(|e| format!("row {}: {e}", i + 1))?;
    }
    Ok(IdsCurve { points, samples, dimension, points_per_unit: 0, seed: 0 })
}
