//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Recognized keys:
//! `suites`, `seed`, `n_cells`, `t_max`, `dim_k`, `truncation`, `r_diag`,
//! `r_matrix` (rows separated by `;`, real entries separated by `,`),
//! `out`, `format` and `tol.<check-id>`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::car::quasifree::QuasiFreeSpec;
use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};

pub const SUITES: [&str; 5] = ["fock-check", "sps-check", "cohomology-check", "two-index", "car-check"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Markdown,
    Both,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "markdown" => Ok(Self::Markdown),
            "both" => Ok(Self::Both),
            other => Err(Error::Config(format!("format: expected json, markdown or both, got {other:?}"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Markdown => "markdown",
            Self::Both => "both",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub suites: Vec<String>,
    pub seed: u64,
    pub n_cells: usize,
    pub t_max: f64,
    pub dim_k: usize,
    pub truncation: usize,
    pub r: CMatrix,
    pub tolerances: BTreeMap<String, f64>,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suites: vec!["all".into()],
            seed: 0,
            n_cells: 6,
            t_max: 1.0,
            dim_k: 1,
            truncation: 4,
            r: CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c64(1.0 / 3.0), c64(2.0 / 3.0)])),
            tolerances: BTreeMap::new(),
            out: PathBuf::from("superfock-report"),
            format: OutputFormat::Both,
        }
    }
}

fn field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn reals(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|x| field::<f64>(key, x.trim())).collect()
}

impl RunConfig {
    /// Parses a configuration file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut errors = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected key = value", lineno + 1));
                continue;
            };
            match cfg.set(key.trim(), value.trim()) {
                Err(Error::Config(msg)) => errors.push(format!("line {}: {msg}", lineno + 1)),
                Err(e) => errors.push(format!("line {}: {e}", lineno + 1)),
                Ok(()) => {}
            }
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors.join("; ")));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "suites" | "suite" => self.suites = value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            "seed" => self.seed = field(key, value)?,
            "n_cells" | "cells" => self.n_cells = field(key, value)?,
            "t_max" => self.t_max = field(key, value)?,
            "dim_k" => self.dim_k = field(key, value)?,
            "truncation" => self.truncation = field(key, value)?,
            "r_diag" => {
                let v = reals(key, value)?;
                self.r = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.into_iter().map(c64)));
            }
            "r_matrix" => {
                let rows: Vec<Vec<f64>> = value.split(';').map(|r| reals(key, r)).collect::<Result<_>>()?;
                let n = rows.len();
                if rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!("{key}: matrix must be square")));
                }
                self.r = CMatrix::from_fn(n, n, |i, j| c64(rows[i][j]));
            }
            "out" => self.out = PathBuf::from(value),
            "format" => self.format = OutputFormat::parse(value)?,
            k if k.starts_with("tol.") => {
                self.tolerances.insert(k["tol.".len()..].to_string(), field(key, value)?);
            }
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.suites.is_empty() {
            errors.push("suites: empty selection".to_string());
        }
        for s in &self.suites {
            if s != "all" && !SUITES.contains(&s.as_str()) {
                errors.push(format!("suites: unknown suite {s:?}"));
            }
        }
        if self.n_cells == 0 {
            errors.push("n_cells: must be positive".into());
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            errors.push("t_max: must be positive".into());
        }
        if self.dim_k == 0 {
            errors.push("dim_k: must be positive".into());
        }
        if self.truncation == 0 {
            errors.push("truncation: must be positive".into());
        }
        for (id, t) in &self.tolerances {
            if !(*t > 0.0) {
                errors.push(format!("tol.{id}: must be positive"));
            }
        }
        if let Err(e) = QuasiFreeSpec::new(self.r.clone()) {
            errors.push(format!("r: {e}"));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors.join("; ")))
        }
    }

    /// The selected suites in canonical order.
    pub fn selected_suites(&self) -> Vec<&'static str> {
        if self.suites.iter().any(|s| s == "all") {
            return SUITES.to_vec();
        }
        SUITES.iter().copied().filter(|s| self.suites.iter().any(|x| x == s)).collect()
    }

    pub fn tolerance(&self, id: &str, default: f64) -> f64 {
        self.tolerances.get(id).copied().unwrap_or(default)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_files() {
        let cfg =
            RunConfig::parse("# comment\nsuites = fock-check, car-check\nseed = 7\nn_cells = 4\nr_diag = 0.25, 0.5\ntol.fock.car = 1e-9\n")
                .unwrap();
        assert_eq!(cfg.selected_suites(), vec!["fock-check", "car-check"]);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.n_cells, 4);
        assert_eq!(cfg.tolerance("fock.car", 1.0), 1e-9);
        assert_eq!(cfg.r[(1, 1)], c64(0.5));
    }

    #[test]
    fn reports_every_bad_field() {
        let err = RunConfig::parse("seed = x\ncolour = blue\nsuites = nope\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("seed") && msg.contains("colour"), "{msg}");
        let err = RunConfig::parse("suites = nope\n").unwrap_err();
        assert!(err.to_string().contains("unknown suite"));
        assert!(RunConfig::parse("r_diag = 1.5\n").is_err());
        assert!(RunConfig::parse("tol.x = -1\n").is_err());
    }

    #[test]
    fn all_expands_in_order() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.selected_suites(), SUITES.to_vec());
    }
}
