//! Deterministic run reports.

use crate::config::RunConfig;
use quake_core::verify::CheckResult;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::fmt::Write;

/// SHA-256 of the canonical JSON form of the effective configuration.
pub fn config_hash(cfg: &RunConfig) -> String {
    let bytes = serde_json::to_vec(cfg).expect("configuration serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    CheckFailed,
    ConfigError,
    NumericalError,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::ConfigError => 2,
            Status::NumericalError => 3,
            Status::CheckFailed => 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub message: String,
    /// Inputs that reproduce the failure.
    pub witness: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub status: Status,
    pub checks: Vec<CheckResult>,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorRecord>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Report {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash(config),
            config: config.clone(),
            status: Status::Pass,
            checks: Vec::new(),
            result: Value::Null,
            error: None,
        }
    }

    /// Pass unless an error was recorded or some check failed.
    pub fn settle(&mut self) {
        if self.error.is_none() {
            self.status = if self.checks.iter().all(|c| c.pass) { Status::Pass } else { Status::CheckFailed };
        }
    }

    pub fn fail(&mut self, status: Status, message: String, witness: Value) {
        self.status = status;
        self.error = Some(ErrorRecord { message, witness });
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "quake {} {}", self.version, self.command);
        let _ = writeln!(s, "config {}", self.config_hash);
        let _ = writeln!(s, "genus {}  dimension {}  seed {}", self.config.genus, self.config.dimension, self.config.seed);
        let status = serde_json::to_value(self.status).expect("status serializes");
        let _ = writeln!(s, "status {}", status.as_str().unwrap_or_default());
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error {}", e.message);
        }
        if !self.checks.is_empty() {
            let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
            s.push('\n');
            for c in &self.checks {
                let _ = writeln!(
                    s,
                    "{}  {:<width$}  residual {:.3e}  threshold {:.1e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.residual,
                    c.threshold,
                );
            }
        }
        if let Value::Object(map) = &self.result {
            let scalars: Vec<_> = map.iter().filter(|(_, v)| !v.is_array() && !v.is_object()).collect();
            if !scalars.is_empty() {
                s.push('\n');
                for (k, v) in scalars {
                    let _ = writeln!(s, "{k} {v}");
                }
            }
        }
        s
    }
}
