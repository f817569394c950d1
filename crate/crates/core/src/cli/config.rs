use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{AugmentConfig, MixtureConfig};
use crate::error::{Error, Result};
use crate::trainer::{EncoderShape, TrainConfig};

/// One JSON document describing a whole run. Every section is optional and
/// falls back to its defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Run directory. Not written by `to_json`, so run contents do not
    /// depend on where the run lives.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    pub normalize_features: bool,
    pub data: MixtureConfig,
    pub encoder: EncoderShape,
    pub train: TrainConfig,
    pub augment: AugmentConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            out: PathBuf::from("runs/default"),
            normalize_features: true,
            data: MixtureConfig::default(),
            encoder: EncoderShape::default(),
            train: TrainConfig::default(),
            augment: AugmentConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Training config with the run seed applied.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.data.validate()?;
        self.train_config().validate()?;
        self.augment.validate()?;
        let s = self.encoder;
        if s.hidden == 0 || s.feat_dim == 0 || s.proj_dim == 0 {
            return Err(Error::Config(format!(
                "encoder widths must be >= 1, got {s:?}"
            )));
        }
        Ok(())
    }
}
