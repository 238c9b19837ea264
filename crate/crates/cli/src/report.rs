use std::io::Write;

use ncgabor::geometry::ToleranceLadder;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<"` if the value must stay below `tol`, `">="` if it must reach it.
    pub relation: &'static str,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn below(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, relation: "<", tol, pass: value < tol }
    }

    pub fn at_least(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { name: name.into(), value, relation: ">=", tol, pass: value >= tol }
    }
}

/// One JSON document per run. Holds no timestamps, so equal configs give equal bytes.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ExperimentConfig,
    pub ladder: ToleranceLadder,
    pub radius: f64,
    pub seed: u64,
    pub results: Map<String, Value>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Report {
            tool: "ncgabor",
            version: ncgabor::VERSION,
            command: command.to_string(),
            config: config.clone(),
            ladder: config.ladder,
            radius: config.radius,
            seed: config.seed,
            results: Map::new(),
            checks: Vec::new(),
            pass: true,
        }
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("report values serialize");
        self.results.insert(key.to_string(), v);
    }

    pub fn check(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in &self.checks {
            let tag = if c.pass { "PASS" } else { "FAIL" };
            writeln!(w, "{tag} {}: {:.3e} {} {:.1e}", c.name, c.value, c.relation, c.tol)?;
        }
        writeln!(w, "{}: {}", self.command, if self.pass { "all checks pass" } else { "some checks FAILED" })
    }
}

pub fn write_file(path: &str, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_string(), source })
}
