//! Self-describing JSON model file.

use std::path::Path;

use parnet::network::InitBounds;
use parnet::{Architecture, StopReason, WeightVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::manifest::FitSchedule;
use crate::table::write_file;

pub const MODEL_FORMAT: &str = "parnet-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    pub n: usize,
    pub seed: u64,
    pub bounds: InitBounds,
    pub schedule: FitSchedule,
    /// Gradient steps of the returned weights.
    pub steps: u64,
    pub stepsize: f64,
    pub doubling_index: u32,
    pub stop_reason: StopReason,
    pub training_risk: f64,
    /// L2 distance to the synthetic regression function, when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub synthetic_l2_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub architecture: Architecture,
    /// Predictions are clipped to `[-beta, beta]`.
    pub beta: f64,
    pub training: TrainingInfo,
    /// Flat weights, block by block.
    pub weights: Vec<f64>,
}

impl ModelFile {
    pub fn new(weights: &WeightVector, beta: f64, training: TrainingInfo) -> Self {
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            architecture: *weights.arch(),
            beta,
            training,
            weights: weights.as_slice().to_vec(),
        }
    }

    pub fn weights(&self) -> Result<WeightVector> {
        Ok(WeightVector::from_values(self.architecture, self.weights.clone())?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let model: ModelFile =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if model.format != MODEL_FORMAT {
            return Err(CliError::Data(format!("{}: not a {MODEL_FORMAT} file", path.display())));
        }
        if model.version != MODEL_VERSION {
            return Err(CliError::Data(format!(
                "{}: unsupported model version {} (this build reads {MODEL_VERSION})",
                path.display(),
                model.version
            )));
        }
        Ok(model)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("model serializes");
        text.push('\n');
        write_file(path, text.as_bytes())
    }
}
