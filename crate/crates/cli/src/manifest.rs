//! Run manifest written at the end of every `run`.

use serde::Serialize;

use crate::config::Params;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub report: String,
    pub name: String,
    pub outcome: String,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRecord {
    pub id: String,
    pub module: String,
    pub seed: u64,
    pub config: Params,
    /// `pass`, `fail`, `inconclusive` or `error`.
    pub verdict: String,
    pub checks: Vec<CheckRecord>,
    pub wall_seconds: f64,
    /// Paths relative to the output directory.
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Global seed override, if any.
    pub seed: Option<u64>,
    pub workers: usize,
    /// Ordered by experiment id.
    pub experiments: Vec<ExperimentRecord>,
}

impl RunManifest {
    pub fn any_error(&self) -> bool {
        self.experiments.iter().any(|e| e.error.is_some())
    }

    pub fn all_passed(&self) -> bool {
        !self.experiments.is_empty() && self.experiments.iter().all(|e| e.verdict == "pass")
    }

    /// 0 if every verdict passed, 3 on any compute error, else 1.
    pub fn exit_code(&self) -> i32 {
        if self.any_error() {
            3
        } else if self.all_passed() {
            0
        } else {
            1
        }
    }
}
