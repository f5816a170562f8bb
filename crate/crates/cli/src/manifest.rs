//! Run manifests: everything needed to regenerate a run's outputs.

use std::path::{Path, PathBuf};

use parnet::experiments::ExperimentConfig;
use parnet::network::InitBounds;
use parnet::simulation::FitMethod;
use parnet::ScheduleConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::table::write_file;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL: &str = "parnet";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitSchedule {
    Adaptive { schedule: ScheduleConfig },
    Fixed { steps: u64, stepsize: f64 },
}

/// Resolved settings of `parnet fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub input: PathBuf,
    pub seed: u64,
    pub blocks: usize,
    pub depth: usize,
    pub width: usize,
    pub bounds: InitBounds,
    pub c12: f64,
    pub schedule: FitSchedule,
    pub trace: bool,
    pub synthetic_l2: bool,
}

impl FitConfig {
    pub fn method(&self) -> FitMethod {
        match self.schedule {
            FitSchedule::Adaptive { schedule } => FitMethod::Adaptive {
                bounds: self.bounds,
                schedule,
            },
            FitSchedule::Fixed { steps, stepsize } => FitMethod::Fixed {
                bounds: self.bounds,
                lambda: stepsize,
                steps,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "snake_case")]
pub enum RunCommand {
    Fit(FitConfig),
    Experiment(ExperimentConfig),
}

impl RunCommand {
    pub fn seed(&self) -> u64 {
        match self {
            RunCommand::Fit(c) => c.seed,
            RunCommand::Experiment(c) => c.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    #[serde(flatten)]
    pub run: RunCommand,
    pub seed: u64,
    /// Output files next to the manifest, in the order they were written.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    pub fn new(run: RunCommand, artifacts: Vec<String>) -> Self {
        RunManifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: run.seed(),
            run,
            artifacts,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if manifest.tool != TOOL {
            return Err(CliError::Data(format!("{}: not a {TOOL} manifest", path.display())));
        }
        if manifest.seed != manifest.run.seed() {
            return Err(CliError::Data(format!(
                "{}: manifest seed {} disagrees with its configuration",
                path.display(),
                manifest.seed
            )));
        }
        Ok(manifest)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_file(&dir.join(MANIFEST_FILE), text.as_bytes())
    }
}
