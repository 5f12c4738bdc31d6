use std::fs;
use std::path::Path;

use mixamp::baseline::{BaselineConfig, BaselineVariant};
use mixamp::experiment::{DerivedSeeds, Scenario};
use mixamp::solver::MixAmpConfig;
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Snapshot of one `separate` run. `scenario` alone is enough to rerun it;
/// the derived fields are recorded for inspection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub scenario: Scenario,
    pub seeds: DerivedSeeds,
    pub m: usize,
    pub n: usize,
    pub include_timing: bool,
    pub mixamp: Option<MixAmpConfig>,
    pub baseline: Option<BaselineSnapshot>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    /// Solver error, if the run failed.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineSnapshot {
    pub config: BaselineConfig,
    pub variant: BaselineVariant,
}

impl RunManifest {
    pub fn new(scenario: &Scenario, include_timing: bool) -> Self {
        let n = scenario.side * scenario.side;
        Self {
            tool: "mixamp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            scenario: scenario.clone(),
            seeds: DerivedSeeds::from_seed(scenario.seed),
            m: scenario.m(),
            n,
            include_timing,
            mixamp: scenario.solver.runs_mixamp().then(|| scenario.mixamp_config()),
            baseline: scenario.solver.runs_baseline().then(|| {
                let (config, variant) = scenario.baseline_config();
                BaselineSnapshot { config, variant }
            }),
            artifacts: Vec::new(),
            failure: None,
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad manifest {}: {e}", path.display()))
    }
}

/// Snapshot of a `sweep`: the grid plus one manifest per instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepManifest {
    pub tool: String,
    pub version: String,
    pub sampling: Vec<f64>,
    pub seeds: Vec<u64>,
    pub include_timing: bool,
    /// Instance directories relative to the sweep output directory.
    pub runs: Vec<String>,
}

impl SweepManifest {
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        text.push('\n');
        fs::write(dir.join(MANIFEST_FILE), text)
    }
}
