//! On-disk formats: CSV, binary PBM/PGM and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use lgcalab_core::{LatticeState, Matrix64};
use serde::Serialize;

use crate::CliError;

/// Fixed float format for every CSV: 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Comma-separated text with a header row and LF line endings.
#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: impl IntoIterator<Item = S>) -> Self {
        let mut c = Self::default();
        c.row(header);
        c
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: impl IntoIterator<Item = S>) {
        for (i, f) in fields.into_iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(f.as_ref());
        }
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, self.text.as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Binary PBM (P4); `true` is black.
pub fn pbm(rows: &[Vec<bool>]) -> Vec<u8> {
    let width = rows.first().map_or(0, Vec::len);
    let mut out = format!("P4\n{width} {}\n", rows.len()).into_bytes();
    for row in rows {
        for chunk in row.chunks(8) {
            let byte = chunk.iter().enumerate().fold(0u8, |b, (i, &on)| b | u8::from(on) << (7 - i));
            out.push(byte);
        }
    }
    out
}

/// Binary PGM (P5) of a lattice: gray level `popcount · 255 / z`, row 0 on
/// top.
pub fn pgm(state: &LatticeState) -> Vec<u8> {
    let topo = state.topology();
    let z = topo.z() as u32;
    let mut out = format!("P5\n{} {}\n255\n", topo.width(), topo.height()).into_bytes();
    out.extend(state.cells().iter().map(|&m| (m.count_ones() * 255 / z) as u8));
    out
}

/// `x,y,mask` for every site.
pub fn bitmask_csv(state: &LatticeState) -> Csv {
    let w = state.topology().width();
    let mut csv = Csv::new(["x", "y", "mask"]);
    for (i, m) in state.cells().iter().enumerate() {
        csv.row([(i % w).to_string(), (i / w).to_string(), m.to_string()]);
    }
    csv
}

/// Numeric CSV into a matrix. A first line that does not parse as numbers
/// is taken as a header.
pub fn read_matrix(path: &Path) -> Result<Matrix64, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if rows.is_empty() && lineno == 0 => continue,
            Err(e) => {
                return Err(CliError::Usage(format!("{}: line {}: {e}", path.display(), lineno + 1)));
            }
        }
    }
    Matrix64::from_rows(&rows).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: &impl Serialize, seed: u64, started: DateTime<Utc>, outputs: Vec<String>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            params: serde_json::to_value(params).expect("parameters serialize"),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Table rows of `values` as one line, for terminal output.
pub fn join_fixed(values: &[f64], decimals: usize) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:.decimals$}");
    }
    s
}
