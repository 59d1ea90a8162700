use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the negative phase rebuilds the visible layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reconstruction {
    /// Use the conditional mean (probabilities for binary units).
    MeanField,
    /// Draw a sample from the conditional.
    Sample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Momentum is zero before this epoch.
    pub momentum_start_epoch: usize,
    /// L2 decay on W, U, A and B; biases are exempt.
    pub weight_decay: f64,
    pub cd_steps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub history_order: usize,
    /// Standard deviation of the initial weight matrices.
    pub init_std: f64,
    pub reconstruction: Reconstruction,
    /// Re-sample labels from p(y | h) in the negative phase instead of
    /// keeping them clamped to the data.
    pub resample_labels: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            momentum: 0.9,
            momentum_start_epoch: 5,
            weight_decay: 2e-4,
            cd_steps: 1,
            epochs: 30,
            batch_size: 64,
            seed: 0,
            history_order: 15,
            init_std: 0.01,
            reconstruction: Reconstruction::MeanField,
            resample_labels: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be >= 0".into()));
        }
        if self.cd_steps == 0 || self.batch_size == 0 {
            return Err(Error::Config("cd_steps and batch_size must be >= 1".into()));
        }
        if self.init_std < 0.0 {
            return Err(Error::Config("init_std must be >= 0".into()));
        }
        Ok(())
    }

    /// Parses a `key = value` document (TOML); unspecified keys keep their
    /// defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub(crate) fn momentum_at(&self, epoch: usize) -> f64 {
        if epoch >= self.momentum_start_epoch {
            self.momentum
        } else {
            0.0
        }
    }
}
