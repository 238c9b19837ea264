//! Flat `key=value` configuration. Repeated keys accumulate into arrays; command-line flags
//! replace whatever the file said for the same key.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use ncgabor::geometry::{ExperimentSettings, ToleranceLadder, WindowSpec};
use ncgabor::lattice::TorusParams;
use ncgabor::signal::GridSpec;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};

pub const KEYS: &[&str] = &[
    "alpha",
    "beta",
    "r",
    "s",
    "q",
    "L",
    "N",
    "radius",
    "eps0",
    "cg_tol",
    "cg_max_iter",
    "seed",
    "probes",
    "count",
    "grid",
    "window",
    "c",
    "lambda",
    "n",
    "path",
    "perturb",
    "task",
    "corpus",
    "out",
    "csv",
    "plot_dir",
    "window_out",
];

/// Keys that may hold several values in a sweep.
pub const SWEEP_AXES: &[&str] = &["alpha", "beta", "r", "s", "q"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Vec<String>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
            let key = key.trim();
            check_key(key).map_err(|e| config(format!("line {}: {e}", i + 1)))?;
            raw.entries.entry(key.to_string()).or_default().push(value.trim().to_string());
        }
        Ok(raw)
    }

    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_string(), source })?;
        Self::parse(&text)
    }

    /// Replaces the values of `key`.
    pub fn set(&mut self, key: &str, values: Vec<String>) {
        debug_assert!(KEYS.contains(&key), "unknown key {key}");
        if !values.is_empty() {
            self.entries.insert(key.to_string(), values);
        }
    }

    pub fn clear(&mut self, key: &str) {
        self.entries.remove(key);
    }

    pub fn values(&self, key: &str) -> &[String] {
        self.entries.get(key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn single(&self, key: &str) -> Result<Option<&str>> {
        match self.values(key) {
            [] => Ok(None),
            [v] => Ok(Some(v)),
            many => Err(config(format!("{key} is given {} times; only sweep accepts several values", many.len()))),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.single(key)? {
            None => Ok(default),
            Some(v) => parse_value(key, v),
        }
    }

    /// All values of a sweep axis, with `a:b:step` ranges expanded.
    pub fn axis(&self, key: &str) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for v in self.values(key) {
            out.extend(expand_range(key, v)?);
        }
        Ok(out)
    }

    /// A copy with each sweep axis pinned to a single value.
    pub fn pinned(&self, point: &[(&str, f64)]) -> RawConfig {
        let mut out = self.clone();
        for (k, v) in point {
            out.entries.insert(k.to_string(), vec![v.to_string()]);
        }
        out
    }
}

fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(config(format!("unknown key {key:?}")))
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| config(format!("cannot parse {key} = {v:?}")))
}

/// `a:b:step` is the arithmetic progression from `a` up to `b` inclusive; a plain number is
/// a single value.
pub fn expand_range(key: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        [x] => Ok(vec![parse_value(key, x)?]),
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (parse_value(key, a)?, parse_value(key, b)?, parse_value(key, step)?);
            if !(step > 0.0) || !(b >= a) {
                return Err(config(format!("{key}: range {v:?} needs a <= b and step > 0")));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(config(format!("{key}: range {v:?} has {count} points")));
            }
            // rounded so that 0.3 + 1 * 0.05 prints as 0.35
            Ok((0..count).map(|k| ((a + k as f64 * step) * 1e12).round() / 1e12).collect())
        }
        _ => Err(config(format!("{key}: expected a number or a:b:step, got {v:?}"))),
    }
}

/// `re` or `re,im`.
pub fn parse_complex(key: &str, v: &str) -> Result<Complex64> {
    match v.split_once(',') {
        None => Ok(Complex64::new(parse_value(key, v)?, 0.0)),
        Some((re, im)) => Ok(Complex64::new(parse_value(key, re)?, parse_value(key, im)?)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Axioms,
    Frame,
    WexlerRaz,
    Chern,
    Energy,
    Soliton,
    Moyal,
}

impl FromStr for Task {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "axioms" => Task::Axioms,
            "frame" => Task::Frame,
            "wexler_raz" => Task::WexlerRaz,
            "chern" => Task::Chern,
            "energy" => Task::Energy,
            "soliton" => Task::Soliton,
            "moyal" => Task::Moyal,
            other => return Err(config(format!("unknown task {other:?}"))),
        })
    }
}

/// Chern, energy and self-duality all need the frame; sorting puts it first.
pub fn dependency_order(tasks: &[Task]) -> Vec<Task> {
    let mut out = tasks.to_vec();
    if out.iter().any(|t| matches!(t, Task::WexlerRaz | Task::Chern | Task::Energy | Task::Soliton)) {
        out.push(Task::Frame);
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: TorusParams,
    pub grid: GridSpec,
    pub radius: f64,
    pub eps0: f64,
    /// Relative residual at which conjugate gradients stop.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    pub ladder: ToleranceLadder,
    pub seed: u64,
    pub probes: usize,
    pub count: usize,
    pub symbol_grid: usize,
    pub window: WindowSpec,
    pub tasks: Vec<Task>,
}

impl ExperimentConfig {
    pub fn resolve(raw: &RawConfig, default_tasks: &[Task]) -> Result<Self> {
        let q: u32 = raw.get("q", 1)?;
        let unit = u32::from(q > 1);
        let alpha = raw.get("alpha", 0.5)?;
        let beta = raw.get("beta", 0.5)?;
        let params = TorusParams::new(alpha, beta, raw.get("r", unit)?, raw.get("s", unit)?, q)?;
        let grid = GridSpec::new(raw.get("L", 16.0)?, raw.get("N", 512)?, q)?;
        let radius: f64 = raw.get("radius", 6.0)?;
        if !(radius > 0.0) {
            return Err(config("radius must be positive"));
        }
        let eps0: f64 = raw.get("eps0", 1e-8)?;
        if !(eps0 > 0.0) {
            return Err(config("eps0 must be positive"));
        }
        let cg_tol: f64 = raw.get("cg_tol", 1e-12)?;
        if !(cg_tol > 0.0) {
            return Err(config("cg_tol must be positive"));
        }
        let tasks = match raw.values("task") {
            [] => default_tasks.to_vec(),
            vs => vs.iter().map(|v| v.parse()).collect::<Result<Vec<Task>>>()?,
        };
        if tasks.is_empty() {
            return Err(config("no tasks requested"));
        }
        Ok(ExperimentConfig {
            params,
            grid,
            radius,
            eps0,
            cg_tol,
            cg_max_iter: raw.get("cg_max_iter", ncgabor::frame::CG_MAX_ITER)?,
            ladder: ToleranceLadder::new(eps0),
            seed: raw.get("seed", 0)?,
            probes: raw.get("probes", 16)?,
            count: raw.get("count", 10)?,
            symbol_grid: raw.get("grid", 32)?,
            window: resolve_window(raw, q)?,
            tasks: dependency_order(&tasks),
        })
    }

    pub fn settings(&self) -> ExperimentSettings {
        ExperimentSettings {
            grid: self.grid,
            radius: self.radius,
            probes: self.probes,
            seed: self.seed,
            cg_tol: self.cg_tol,
        }
    }
}

fn resolve_window(raw: &RawConfig, q: u32) -> Result<WindowSpec> {
    let default = if q == 1 || !raw.values("c").is_empty() { "gaussian" } else { "lifted_gaussian" };
    let base = match raw.single("window")?.unwrap_or(default) {
        "gaussian" => {
            let c = match raw.values("c") {
                [] => vec![Complex64::new(1.0, 0.0); q as usize],
                vs => vs.iter().map(|v| parse_complex("c", v)).collect::<Result<Vec<_>>>()?,
            };
            if c.len() != q as usize {
                return Err(config(format!("gaussian window needs {q} channel weights c, got {}", c.len())));
            }
            let lambda = match raw.single("lambda")? {
                None => Complex64::new(0.0, 0.0),
                Some(v) => parse_complex("lambda", v)?,
            };
            WindowSpec::Gaussian { c, lambda }
        }
        "lifted_gaussian" => WindowSpec::LiftedGaussian,
        "hermite" => WindowSpec::Hermite { n: raw.get("n", 0)? },
        "file" => {
            let path = raw.single("path")?.ok_or_else(|| config("window = file needs path"))?;
            WindowSpec::File { path: PathBuf::from(path) }
        }
        other => return Err(config(format!("unknown window {other:?}"))),
    };
    match raw.single("perturb")? {
        None => Ok(base),
        Some(v) => {
            let (n, eps) = v.split_once(',').ok_or_else(|| config(format!("perturb: expected n,eps, got {v:?}")))?;
            Ok(WindowSpec::Perturbed {
                base: Box::new(base),
                hermite: parse_value("perturb", n)?,
                eps: parse_value("perturb", eps)?,
            })
        }
    }
}
