//! Artifact writing: self-describing CSVs, JSON reports and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Formats a float so the same value always yields the same bytes.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.12e}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_else(|| "nan".into())
}

/// CSV table whose header comments define every column.
pub struct Csv {
    columns: Vec<(&'static str, &'static str)>,
    title: String,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(title: impl Into<String>, columns: &[(&'static str, &'static str)]) -> Csv {
        Csv {
            columns: columns.to_vec(),
            title: title.into(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let mut out = format!("# {}\n", self.title);
        for (name, def) in &self.columns {
            let _ = writeln!(out, "# {name}: {def}");
        }
        let names: Vec<&str> = self.columns.iter().map(|c| c.0).collect();
        out.push_str(&names.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    file: String,
    sha256: String,
    bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    status: &'a str,
    exit_code: i32,
    config_sha256: &'a str,
    gnslab_version: &'static str,
    core_version: &'static str,
    parallel: bool,
    workers: usize,
    wall_time_seconds: f64,
    outputs: &'a [OutputEntry],
    failures: &'a [String],
}

/// Output directory of one run; tracks every file for the manifest.
pub struct RunDir {
    root: PathBuf,
    outputs: Vec<OutputEntry>,
    failures: Vec<String>,
    started: Instant,
    config_sha256: String,
}

impl RunDir {
    pub fn create(root: &Path, resolved_config: &str) -> Result<RunDir, CliError> {
        fs::create_dir_all(root)?;
        let mut dir = RunDir {
            root: root.to_path_buf(),
            outputs: Vec::new(),
            failures: Vec::new(),
            started: Instant::now(),
            config_sha256: sha256_hex(resolved_config.as_bytes()),
        };
        dir.write("config.toml", resolved_config.as_bytes())?;
        Ok(dir)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.root.join(name), bytes)?;
        self.outputs.push(OutputEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Registers a file produced by someone else (e.g. a profile writer).
    pub fn record(&mut self, name: &str) -> Result<(), CliError> {
        let bytes = fs::read(self.root.join(name))?;
        self.outputs.push(OutputEntry {
            file: name.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    pub fn csv(&mut self, name: &str, table: &Csv) -> Result<(), CliError> {
        self.write(name, table.render().as_bytes())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Records a failed assertion; the run will exit with code 1.
    pub fn fail(&mut self, message: impl Into<String>) {
        self.failures.push(message.into());
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    /// Writes `manifest.json` and returns the exit code for the run.
    pub fn finish(self, subcommand: &str, workers: usize, error: Option<&CliError>) -> Result<i32, CliError> {
        let (status, code) = match error {
            Some(e) => ("error", e.exit_code()),
            None if self.failures.is_empty() => ("ok", 0),
            None => ("assertion_failed", 1),
        };
        let mut failures = self.failures.clone();
        if let Some(e) = error {
            failures.push(e.to_string());
        }
        let manifest = Manifest {
            subcommand,
            status,
            exit_code: code,
            config_sha256: &self.config_sha256,
            gnslab_version: env!("CARGO_PKG_VERSION"),
            core_version: gnslab_core::VERSION,
            parallel: gnslab_core::par::parallel_enabled(),
            workers,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: &self.outputs,
            failures: &failures,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(code)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_are_stable() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.5), "1.500000000000e0");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(-2.0e-7), "-2.000000000000e-7");
    }

    #[test]
    fn csv_has_definitions() {
        let mut t = Csv::new("demo", &[("x", "position"), ("y", "value")]);
        t.row(vec!["1".into(), "2".into()]);
        assert_eq!(t.render(), "# demo\n# x: position\n# y: value\nx,y\n1,2\n");
    }

    #[test]
    fn digest_is_hex() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
