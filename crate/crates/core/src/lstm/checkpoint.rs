use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::Normalization;
use super::model::LstmModel;
use super::train::TrainConfig;
use crate::error::{Error, Result};

const FORMAT: &str = "sentilag-lstm/1";

/// Self-describing JSON checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub input_size: usize,
    pub hidden_size: usize,
    pub layers: usize,
    pub lag: usize,
    pub seed: u64,
    pub config: TrainConfig,
    pub normalization: Normalization,
    pub model: LstmModel,
}

impl Checkpoint {
    pub fn new(model: LstmModel, normalization: Normalization, config: TrainConfig, lag: usize) -> Self {
        Self {
            format: FORMAT.into(),
            input_size: model.input_size(),
            hidden_size: model.hidden_size(),
            layers: model.layers.len(),
            lag,
            seed: config.seed,
            config,
            normalization,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        if ck.format != FORMAT {
            return Err(Error::Invalid(format!("unknown checkpoint format {:?}", ck.format)));
        }
        let m = &ck.model;
        let shapes_ok = m.layers.len() == ck.layers
            && m.input_size() == ck.input_size
            && m.hidden_size() == ck.hidden_size
            && m.head_weights.len() == ck.hidden_size
            && m.layers.iter().all(|l| {
                l.weights.len() == 4 * l.hidden_size * (l.input_size + l.hidden_size)
                    && l.bias.len() == 4 * l.hidden_size
            });
        if !shapes_ok {
            return Err(Error::Invalid("checkpoint shapes are inconsistent".into()));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters"));
        }
        Ok(ck)
    }
}
