//! Tables, atomic artifact writes and the run manifest.

use crate::error::{CliError, CliResult};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn ext(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_f(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| Cell::F(x)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let line: Vec<String> = r
                .iter()
                .map(|c| match c {
                    Cell::F(x) => fmt_f64(*x),
                    Cell::I(i) => i.to_string(),
                })
                .collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// {"columns": [...], "rows": [[...]]}; non-finite values become null.
    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|c| match c {
                        Cell::F(x) => serde_json::Number::from_f64(*x)
                            .map(serde_json::Value::Number)
                            .unwrap_or(serde_json::Value::Null),
                        Cell::I(i) => serde_json::Value::from(*i),
                    })
                    .collect()
            })
            .collect();
        let v = serde_json::json!({ "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&v).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> Vec<u8> {
        match format {
            Format::Csv => self.to_csv().into_bytes(),
            Format::Json => self.to_json().into_bytes(),
        }
    }
}

/// An output held in memory until every computation of the run has succeeded.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn table(stem: &str, table: &Table, format: Format) -> Self {
        Artifact {
            name: format!("{stem}.{}", format.ext()),
            bytes: table.render(format),
        }
    }

    pub fn json<T: Serialize>(name: &str, value: &T) -> CliResult<Self> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(e.to_string()))?;
        s.push('\n');
        Ok(Artifact {
            name: name.to_string(),
            bytes: s.into_bytes(),
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::Builder::new().prefix(".oscillotex-").tempfile_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644)).map_err(io)?;
    }
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub scenario_hash: String,
    pub scenario: serde_json::Value,
    pub platform: String,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<OutputEntry>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Resolved scenario plus the artifacts it produced.
pub struct RunOutput {
    pub kind: &'static str,
    pub scenario: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
}

pub fn scenario_hash(kind: &str, scenario: &serde_json::Value) -> String {
    let canon = serde_json::to_string(&serde_json::json!({ "kind": kind, "scenario": scenario }))
        .expect("scenario serializes");
    sha256_hex(canon.as_bytes())
}

pub fn commit(out_dir: &Path, run: RunOutput, threads: usize, seconds: f64) -> CliResult<RunManifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut outputs = Vec::with_capacity(run.artifacts.len());
    for a in &run.artifacts {
        let path: PathBuf = out_dir.join(&a.name);
        write_atomic(&path, &a.bytes)?;
        outputs.push(OutputEntry {
            path: a.name.clone(),
            bytes: a.bytes.len(),
            sha256: sha256_hex(&a.bytes),
        });
    }
    let manifest = RunManifest {
        tool: "oscillotex".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind: run.kind.into(),
        scenario_hash: scenario_hash(run.kind, &run.scenario),
        scenario: run.scenario,
        platform: format!("{}-{}", std::env::consts::OS, std::env::consts::ARCH),
        threads,
        wall_clock_seconds: seconds,
        outputs,
        warnings: run.warnings,
    };
    let m = Artifact::json(MANIFEST_NAME, &manifest)?;
    write_atomic(&out_dir.join(MANIFEST_NAME), &m.bytes)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, std::f64::consts::PI, -1e-300, 6.02214076e23, 5e-324] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["m", "x"]);
        t.push(vec![Cell::I(-1), Cell::F(0.5)]);
        assert_eq!(t.to_csv(), "m,x\n-1,5.0000000000000000e-1\n");
    }

    #[test]
    fn json_nonfinite_is_null() {
        let mut t = Table::new(&["x"]);
        t.push_f(&[f64::INFINITY]);
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert!(v["rows"][0][0].is_null());
    }

    #[test]
    fn atomic_write_leaves_no_temp_files() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(d.path()).unwrap().count(), 1);
    }

    #[test]
    fn hash_depends_on_kind() {
        let s = serde_json::json!({"a": 1});
        assert_ne!(scenario_hash("stokes2", &s), scenario_hash("couette", &s));
        assert_eq!(scenario_hash("stokes2", &s), scenario_hash("stokes2", &s));
    }
}
