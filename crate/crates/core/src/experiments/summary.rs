use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::SolveTrace;

use super::config::{ExperimentConfig, ExperimentKind};

/// Machine-readable record of one run, written as `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    pub status: String,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub iterations: usize,
    pub active_set: usize,
    pub descent_violations: usize,
    pub energy_decreasing: bool,
    pub wall_time_s: f64,
    pub artifacts: BTreeMap<String, PathBuf>,
    pub metrics: BTreeMap<String, f64>,
}

impl RunSummary {
    /// Summary of a run without a solve (e.g. a simulation).
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            kind: cfg.kind,
            config_hash: cfg.hash(),
            seed: cfg.seed,
            status: "Done".into(),
            initial_energy: 0.0,
            final_energy: 0.0,
            iterations: 0,
            active_set: 0,
            descent_violations: 0,
            energy_decreasing: true,
            wall_time_s: 0.0,
            artifacts: BTreeMap::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn with_trace(cfg: &ExperimentConfig, trace: &SolveTrace<f64>, active_set: usize) -> Self {
        Self {
            status: format!("{:?}", trace.status),
            initial_energy: trace.initial_energy,
            final_energy: trace.final_energy(),
            iterations: trace.iterations,
            active_set,
            descent_violations: trace.descent_violations,
            energy_decreasing: trace.energy_decreasing(),
            ..Self::new(cfg)
        }
    }

    pub fn metric(&self, name: &str) -> Result<f64> {
        self.metrics.get(name).copied().ok_or_else(|| Error::Config(format!("run reported no metric {name:?}")))
    }

    pub fn artifact(&self, name: &str) -> Result<&Path> {
        self.artifacts
            .get(name)
            .map(PathBuf::as_path)
            .ok_or_else(|| Error::Config(format!("run produced no artifact {name:?}")))
    }

    /// Writes `summary.json` into `dir` and records it as an artifact.
    pub fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("summary.json");
        self.artifacts.insert("summary".into(), path.clone());
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
