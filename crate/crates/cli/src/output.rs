//! CSV and JSON writers, and the profile reader for `--init file:`.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use orthowall_core::Profile;

use crate::config::{InitSpec, RunConfig};
use crate::error::CliError;

pub const PROFILE_HEADER: [&str; 7] = ["x", "A", "B", "A_prime", "B_prime", "el_resA", "el_resB"];
pub const REDUCED_HEADER: [&str; 6] = [
    "x",
    "A",
    "B",
    "B_prime",
    "invariant_inner",
    "invariant_outer",
];
pub const SWEEP_HEADER: [&str; 5] = ["g", "min_energy", "testfn_bound", "circle_sup", "converged"];
pub const SWEEP_PLOT_HEADER: [&str; 4] = ["g", "x", "A", "B"];

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn output_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Output {
        path: path.display().to_string(),
        source: e.into(),
    }
}

/// CSV file written row by row and flushed after each row.
pub struct CsvSink {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvSink {
    pub fn create(path: PathBuf, header: &[&str]) -> Result<Self, CliError> {
        let file = File::create(&path).map_err(output_err(&path))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(header).map_err(csv_err(&path))?;
        Ok(CsvSink { path, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(csv_err(&self.path))
    }

    pub fn flush(&mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(output_err(&self.path))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.flush()?;
        Ok(self.path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Output {
        path: path.display().to_string(),
        source: e.into(),
    })?;
    text.push('\n');
    let mut f = File::create(path).map_err(output_err(path))?;
    f.write_all(text.as_bytes()).map_err(output_err(path))
}

#[derive(Debug, Serialize)]
pub struct ParamsEcho {
    pub eps: f64,
    pub g: f64,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
}

#[derive(Debug, Serialize)]
pub struct OptionsEcho {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub init: InitSpec,
}

/// Record of one CLI run, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: ParamsEcho,
    pub options: OptionsEcho,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
    pub converged: bool,
    #[serde(flatten)]
    pub results: serde_json::Map<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        RunManifest {
            command: command.to_string(),
            params: ParamsEcho {
                eps: cfg.eps,
                g: cfg.g,
                half_length: cfg.half_length,
                n: cfg.n,
            },
            options: OptionsEcho {
                grad_tol: cfg.grad_tol,
                max_iters: cfg.max_iters,
                memory: cfg.memory,
                init: cfg.init.clone(),
            },
            config: cfg.clone(),
            outputs: Vec::new(),
            wall_time_seconds: 0.0,
            converged: false,
            results: serde_json::Map::new(),
        }
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.results.insert(key.to_string(), v);
    }
}

/// Reads the first three columns (`x`, `A`, `B`) of a profile CSV.
pub fn read_profile(path: &Path) -> Result<Profile, CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().take(3).collect();
    if cols != ["x", "A", "B"] {
        return Err(bad(format!("expected columns x,A,B first, got {cols:?}")));
    }
    let (mut x, mut a, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |j: usize| -> Result<f64, CliError> {
            rec.get(j)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("row {}: column {j} is not a number", k + 1)))
        };
        x.push(field(0)?);
        a.push(field(1)?);
        b.push(field(2)?);
    }
    if x.len() < 17 {
        return Err(bad(format!("only {} rows", x.len())));
    }
    Ok(Profile { x, a, b })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = num(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn profile_reader_checks_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "x,B,A\n0,0,1\n").unwrap();
        assert!(matches!(read_profile(&path), Err(CliError::Config(_))));
    }
}
