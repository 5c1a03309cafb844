//! Effective run configuration: built-in defaults, overridden by a
//! `key = value` file, overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const DEFAULT_G_LIST: [f64; 7] = [2.0, 1.5, 1.2, 1.1, 1.05, 1.02, 1.01];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitSpec {
    Testfn,
    Reduced,
    File(PathBuf),
}

impl InitSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "testfn" => Ok(InitSpec::Testfn),
            "reduced" => Ok(InitSpec::Reduced),
            other => match other.strip_prefix("file:") {
                Some(path) if !path.is_empty() => Ok(InitSpec::File(PathBuf::from(path))),
                _ => Err(CliError::Config(format!(
                    "init must be testfn, reduced or file:PATH (got {other:?})"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub eps: f64,
    pub g: f64,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub memory: usize,
    pub init: InitSpec,
    pub out_dir: PathBuf,
    pub g_list: Vec<f64>,
    /// Upper bound on the grid step used by `sweep`.
    pub sweep_max_step: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            eps: 1.0,
            g: 2.0,
            half_length: 30.0,
            n: 3000,
            grad_tol: 1e-8,
            max_iters: 50_000,
            memory: 10,
            init: InitSpec::Testfn,
            out_dir: PathBuf::from("."),
            g_list: DEFAULT_G_LIST.to_vec(),
            sweep_max_step: 0.05,
        }
    }
}

/// Values given on the command line; `None` leaves the lower layers alone.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub g: Option<f64>,
    pub half_length: Option<f64>,
    pub n: Option<usize>,
    pub grad_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub init: Option<String>,
    pub out_dir: Option<PathBuf>,
    pub g_list: Option<String>,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}")))
}

pub fn parse_g_list(v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',')
        .map(|s| parse_num::<f64>("g_list", s))
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_file_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "config line {}: expected key = value",
                no + 1
            )));
        };
        let key = k.trim().replace('-', "_");
        if key.is_empty() {
            return Err(CliError::Config(format!("config line {}: empty key", no + 1)));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

impl RunConfig {
    fn apply_entry(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "eps" => self.eps = parse_num(key, v)?,
            "g" => self.g = parse_num(key, v)?,
            "L" => self.half_length = parse_num(key, v)?,
            "n" => self.n = parse_num(key, v)?,
            "grad_tol" => self.grad_tol = parse_num(key, v)?,
            "max_iters" => self.max_iters = parse_num(key, v)?,
            "memory" => self.memory = parse_num(key, v)?,
            "init" => self.init = InitSpec::parse(v)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "g_list" => self.g_list = parse_g_list(v)?,
            "sweep_max_step" => self.sweep_max_step = parse_num(key, v)?,
            other => return Err(CliError::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Defaults, then `file`, then `flags`.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (k, v) in parse_file_text(&text)? {
                cfg.apply_entry(&k, &v)?;
            }
        }
        if let Some(v) = flags.eps {
            cfg.eps = v;
        }
        if let Some(v) = flags.g {
            cfg.g = v;
        }
        if let Some(v) = flags.half_length {
            cfg.half_length = v;
        }
        if let Some(v) = flags.n {
            cfg.n = v;
        }
        if let Some(v) = flags.grad_tol {
            cfg.grad_tol = v;
        }
        if let Some(v) = flags.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = &flags.init {
            cfg.init = InitSpec::parse(v)?;
        }
        if let Some(v) = &flags.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &flags.g_list {
            cfg.g_list = parse_g_list(v)?;
        }
        Ok(cfg)
    }
}
