use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::PredictorParams;
use super::train::TrainConfig;
use crate::error::DataError;

pub const CHECKPOINT_FORMAT: &str = "sigposs-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model together with what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub n_r: usize,
    pub seed: u64,
    pub train_config: TrainConfig,
    pub best_epoch: usize,
    pub params: PredictorParams,
}

impl Checkpoint {
    pub fn new(n_r: usize, train_config: TrainConfig, best_epoch: usize, params: PredictorParams) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            n_r,
            seed: train_config.seed,
            train_config,
            best_epoch,
            params,
        }
    }

    pub fn to_json(&self) -> Result<String, DataError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DataError> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(DataError::Format(format!(
                "expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}, found {} v{}",
                ck.format, ck.version
            )));
        }
        let cfg = &ck.params.config;
        let shapes_ok = ck.params.embedding.dim() == (crate::events::NUM_ACTIONS, cfg.emb_dim)
            && ck.params.w1.dim() == (cfg.input_dim(), cfg.hidden)
            && ck.params.w2.dim() == (cfg.hidden, cfg.hidden)
            && ck.params.w3.dim() == (cfg.hidden, super::OUTPUT_DIM);
        if !shapes_ok {
            return Err(DataError::Format("checkpoint tensor shapes do not match its config".into()));
        }
        Ok(ck)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| DataError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Self::from_json(&text)
    }
}
