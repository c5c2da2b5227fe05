//! Run configuration: a strict TOML schema with dotted-path overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use gnslab_core::gns::B_CRIT;

use crate::error::CliError;

/// A coupling given as a number or as a multiple of the critical strength,
/// e.g. `"1.05bcrit"` or `"bcrit"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Value(f64),
    Text(String),
}

impl Coupling {
    pub fn resolve(&self, path: &str) -> Result<f64, CliError> {
        match self {
            Coupling::Value(v) => Ok(*v),
            Coupling::Text(t) => parse_coupling(t).ok_or_else(|| {
                CliError::config(path, format!("cannot read `{t}` as a number or a multiple of bcrit"))
            }),
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupling::Value(v) => write!(f, "{v}"),
            Coupling::Text(t) => write!(f, "{t}"),
        }
    }
}

pub fn parse_coupling(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Some(prefix) = t.strip_suffix("bcrit") {
        let prefix = prefix.trim().trim_end_matches('*').trim();
        let factor = if prefix.is_empty() { 1.0 } else { prefix.parse::<f64>().ok()? };
        return Some(factor * B_CRIT);
    }
    t.parse().ok()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seed for every random start (Lanczos).
    pub seed: u64,
    pub output: PathBuf,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
    pub grid: GridBlock,
    pub model: ModelBlock,
    pub kernel: KernelBlock,
    pub solver: SolverBlock,
    pub phase: PhaseBlock,
    pub regime: RegimeBlock,
    pub ed: EdBlock,
    pub compare: CompareBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "M")]
    pub points: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    pub a: Coupling,
    pub b: Coupling,
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "N")]
    pub particles: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelBlock {
    /// `"gaussian"` or a path to a kernel file.
    pub two_body: String,
    pub three_body: String,
    pub sigma_two: f64,
    pub sigma_three: f64,
    /// `"reject"` or `"delta"`.
    pub resolution: String,
    /// `"spectral"` or `"direct"`.
    pub route: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub tolerance: f64,
    pub max_iterations: i64,
    pub tau0: f64,
    pub kinetic_ceiling: f64,
    /// `"scaled_q0"`, `"gaussian"` or a path to a profile file.
    pub initializer: String,
    pub init_width: f64,
    pub conjugate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhaseBlock {
    pub a: Vec<Coupling>,
    pub b: Vec<Coupling>,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "M")]
    pub points: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeBlock {
    pub zeta: f64,
    /// `"strength"` (bₙ = 𝔟 - c n^{-p}) or `"amplitude"` (aₙ = c n^{-p}).
    pub schedule: String,
    pub c: f64,
    pub p: f64,
    pub n: Vec<f64>,
    pub correction_d: f64,
    pub correction_q: f64,
    #[serde(rename = "reference_L")]
    pub reference_half_width: f64,
    #[serde(rename = "reference_M")]
    pub reference_points: i64,
    /// Also run the Hartree sweep.
    pub hartree: bool,
    pub eta: f64,
    pub particles: Vec<f64>,
    #[serde(rename = "hartree_L")]
    pub hartree_half_width: f64,
    #[serde(rename = "hartree_M")]
    pub hartree_points: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdBlock {
    #[serde(rename = "N")]
    pub particles: Vec<i64>,
    #[serde(rename = "K")]
    pub modes: i64,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "M")]
    pub points: i64,
    pub tolerance: f64,
    /// Write γ¹ for every `N` as a columnar text file.
    pub dump_gamma: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareBlock {
    #[serde(rename = "N")]
    pub particles: Vec<f64>,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "M")]
    pub points: i64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0x5eed,
            output: PathBuf::from("gnslab-out"),
            workers: 0,
            grid: GridBlock::default(),
            model: ModelBlock::default(),
            kernel: KernelBlock::default(),
            solver: SolverBlock::default(),
            phase: PhaseBlock::default(),
            regime: RegimeBlock::default(),
            ed: EdBlock::default(),
            compare: CompareBlock::default(),
        }
    }
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            half_width: 20.0,
            points: 2048,
        }
    }
}

impl Default for ModelBlock {
    fn default() -> Self {
        ModelBlock {
            a: Coupling::Value(1.0),
            b: Coupling::Text("0.5bcrit".into()),
            s: 2.0,
            alpha: 0.5,
            beta: 0.5,
            particles: 100.0,
        }
    }
}

impl Default for KernelBlock {
    fn default() -> Self {
        KernelBlock {
            two_body: "gaussian".into(),
            three_body: "gaussian".into(),
            sigma_two: 1.0,
            sigma_three: 1.0,
            resolution: "reject".into(),
            route: "spectral".into(),
        }
    }
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            tolerance: 1e-9,
            max_iterations: 20_000,
            tau0: 1.0,
            kinetic_ceiling: 0.002,
            initializer: "scaled_q0".into(),
            init_width: 1.0,
            conjugate: true,
        }
    }
}

impl Default for PhaseBlock {
    fn default() -> Self {
        PhaseBlock {
            a: vec![Coupling::Value(-1.0), Coupling::Value(0.0), Coupling::Value(1.0)],
            b: vec![
                Coupling::Text("0.9bcrit".into()),
                Coupling::Text("bcrit".into()),
                Coupling::Text("1.1bcrit".into()),
            ],
            half_width: 16.0,
            points: 1024,
        }
    }
}

impl Default for RegimeBlock {
    fn default() -> Self {
        RegimeBlock {
            zeta: 6.0,
            schedule: "strength".into(),
            c: 1.0,
            p: 1.0,
            n: vec![10.0, 100.0, 1000.0],
            correction_d: 0.0,
            correction_q: 1.0,
            reference_half_width: 20.0,
            reference_points: 2048,
            hartree: false,
            eta: 0.08,
            particles: vec![100.0, 300.0, 1000.0],
            hartree_half_width: 10.0,
            hartree_points: 4096,
        }
    }
}

impl Default for EdBlock {
    fn default() -> Self {
        EdBlock {
            particles: vec![3, 4, 5],
            modes: 8,
            half_width: 10.0,
            points: 256,
            tolerance: 1e-9,
            dump_gamma: false,
        }
    }
}

impl Default for CompareBlock {
    fn default() -> Self {
        CompareBlock {
            particles: vec![100.0, 1000.0, 10000.0],
            half_width: 8.0,
            points: 8192,
        }
    }
}

/// Parses a `--set` value as TOML, falling back to a bare string.
pub fn parse_override_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Sets `path` (dotted) inside `table`, creating intermediate tables.
pub fn set_path(table: &mut Table, path: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(path, "empty key segment"));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => return Err(CliError::config(path, format!("`{part}` is not a table"))),
        };
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Rejects any key absent from the schema, naming its full path.
fn check_keys(user: &Table, schema: &Table, prefix: &str) -> Result<(), CliError> {
    for (key, value) in user {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match schema.get(key) {
            None => return Err(CliError::config(&path, "unknown key")),
            Some(Value::Table(inner)) => match value {
                Value::Table(u) => check_keys(u, inner, &path)?,
                _ => return Err(CliError::config(&path, "expected a table")),
            },
            Some(_) => {
                if let Value::Table(_) = value {
                    return Err(CliError::config(&path, "expected a value, found a table"));
                }
            }
        }
    }
    Ok(())
}

impl RunConfig {
    /// Merges the file (if any) with `overrides` and validates the result.
    pub fn load(file: Option<&Path>, overrides: &[(String, Value)]) -> Result<RunConfig, CliError> {
        let mut table = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::config("<file>", format!("{}: {e}", path.display())))?;
                text.parse::<Table>()
                    .map_err(|e| CliError::config("<file>", e.to_string()))?
            }
            None => Table::new(),
        };
        for (path, value) in overrides {
            set_path(&mut table, path, value.clone())?;
        }
        let schema = Table::try_from(RunConfig::default()).expect("default config serializes");
        check_keys(&table, &schema, "")?;
        let config: RunConfig = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::config("<config>", e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("grid.L", self.grid.half_width)?;
        even_points("grid.M", self.grid.points)?;
        self.model.a.resolve("model.a")?;
        self.model.b.resolve("model.b")?;
        positive("model.s", self.model.s)?;
        positive("model.alpha", self.model.alpha)?;
        positive("model.beta", self.model.beta)?;
        if !(self.model.particles >= 1.0) {
            return Err(CliError::config("model.N", format!("must be >= 1, got {}", self.model.particles)));
        }
        positive("kernel.sigma_two", self.kernel.sigma_two)?;
        positive("kernel.sigma_three", self.kernel.sigma_three)?;
        one_of("kernel.resolution", &self.kernel.resolution, &["reject", "delta"])?;
        one_of("kernel.route", &self.kernel.route, &["spectral", "direct"])?;
        positive("solver.tolerance", self.solver.tolerance)?;
        positive("solver.tau0", self.solver.tau0)?;
        positive("solver.kinetic_ceiling", self.solver.kinetic_ceiling)?;
        positive("solver.init_width", self.solver.init_width)?;
        if self.solver.max_iterations <= 0 {
            return Err(CliError::config("solver.max_iterations", "must be positive"));
        }
        for (i, a) in self.phase.a.iter().enumerate() {
            a.resolve(&format!("phase.a[{i}]"))?;
        }
        for (i, b) in self.phase.b.iter().enumerate() {
            b.resolve(&format!("phase.b[{i}]"))?;
        }
        positive("phase.L", self.phase.half_width)?;
        even_points("phase.M", self.phase.points)?;
        one_of("regime.schedule", &self.regime.schedule, &["strength", "amplitude"])?;
        positive("regime.reference_L", self.regime.reference_half_width)?;
        even_points("regime.reference_M", self.regime.reference_points)?;
        positive("regime.hartree_L", self.regime.hartree_half_width)?;
        even_points("regime.hartree_M", self.regime.hartree_points)?;
        if self.regime.n.is_empty() || self.regime.n.iter().any(|n| !(*n > 0.0)) {
            return Err(CliError::config("regime.n", "needs positive entries"));
        }
        if self.ed.particles.is_empty() || self.ed.particles.iter().any(|n| *n <= 0) {
            return Err(CliError::config("ed.N", "needs positive entries"));
        }
        if self.ed.modes <= 0 {
            return Err(CliError::config("ed.K", "must be positive"));
        }
        positive("ed.L", self.ed.half_width)?;
        even_points("ed.M", self.ed.points)?;
        positive("ed.tolerance", self.ed.tolerance)?;
        if self.compare.particles.len() < 2 {
            return Err(CliError::config("compare.N", "needs at least two particle numbers"));
        }
        if self.compare.particles.iter().any(|n| !(*n >= 1.0)) {
            return Err(CliError::config("compare.N", "entries must be >= 1"));
        }
        positive("compare.L", self.compare.half_width)?;
        even_points("compare.M", self.compare.points)?;
        Ok(())
    }
}

fn positive(path: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be positive and finite, got {v}")))
    }
}

fn even_points(path: &str, m: i64) -> Result<(), CliError> {
    if m >= 8 && m % 2 == 0 {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be an even integer >= 8, got {m}")))
    }
}

fn one_of(path: &str, v: &str, allowed: &[&str]) -> Result<(), CliError> {
    if allowed.contains(&v) {
        Ok(())
    } else {
        Err(CliError::config(path, format!("`{v}` is not one of {allowed:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn couplings() {
        assert_eq!(parse_coupling("2.5"), Some(2.5));
        assert_eq!(parse_coupling("bcrit"), Some(B_CRIT));
        assert!((parse_coupling("1.05bcrit").unwrap() - 1.05 * B_CRIT).abs() < 1e-12);
        assert!((parse_coupling("0.5*bcrit").unwrap() - 0.5 * B_CRIT).abs() < 1e-12);
        assert_eq!(parse_coupling("lots"), None);
    }

    #[test]
    fn defaults_roundtrip() {
        let c = RunConfig::default();
        let back: RunConfig = toml::from_str(&c.to_toml()).unwrap();
        assert_eq!(back.to_toml(), c.to_toml());
        c.validate().unwrap();
    }

    #[test]
    fn unknown_and_invalid_keys_name_their_path() {
        let err = RunConfig::load(None, &[("grid.Q".into(), Value::Integer(3))]).unwrap_err();
        assert!(err.to_string().contains("grid.Q"), "{err}");
        let err = RunConfig::load(None, &[("grid.M".into(), Value::Integer(-5))]).unwrap_err();
        assert!(err.to_string().contains("grid.M"), "{err}");
        let err = RunConfig::load(None, &[("model.b".into(), Value::String("lots".into()))]).unwrap_err();
        assert!(err.to_string().contains("model.b"), "{err}");
    }

    #[test]
    fn override_values() {
        assert_eq!(parse_override_value("3"), Value::Integer(3));
        assert_eq!(parse_override_value("1.05bcrit"), Value::String("1.05bcrit".into()));
        assert_eq!(
            parse_override_value("[1, 2]"),
            Value::Array(vec![Value::Integer(1), Value::Integer(2)])
        );
    }
}
