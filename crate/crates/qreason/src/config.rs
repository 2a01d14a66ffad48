use std::fs;
use std::path::Path;

use qreason_core::answer::AnswerConfig;
use qreason_core::data::GenConfig;
use qreason_core::model::ReasonConfig;
use qreason_core::train::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{format, io, Result};

/// Everything a command can be configured with. Missing tables and keys
/// take their built-in defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Minimum token count for the vocabulary.
    pub min_count: usize,
    pub data: GenConfig,
    pub reason: ReasonConfig,
    pub answer: AnswerConfig,
    pub train: TrainConfig,
    pub answer_train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            min_count: 1,
            data: GenConfig::default(),
            reason: ReasonConfig::default(),
            answer: AnswerConfig::default(),
            train: TrainConfig::default(),
            answer_train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io(path))?;
        toml::from_str(&text).map_err(|e| format(path, e))
    }

    /// Defaults, overlaid by `path` when given.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Routes one seed to data generation, initialization and both trainers.
    pub fn set_seed(&mut self, seed: u64) {
        self.data.seed = seed;
        self.train.seed = seed;
        self.answer_train.seed = seed;
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs always serialize")
    }
}
