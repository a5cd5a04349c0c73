//! Optimizer and loss hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::TrainError;

fn default_learning_rate() -> f64 {
    1e-3
}

fn default_lambda_gp() -> f64 {
    10.0
}

fn default_batch_size() -> usize {
    4
}

fn default_epochs() -> usize {
    12
}

fn default_alpha() -> f64 {
    0.99
}

fn default_eps() -> f64 {
    1e-8
}

fn default_d_steps() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_lambda_gp")]
    pub lambda_gp: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_alpha")]
    pub rmsprop_alpha: f64,
    #[serde(default = "default_eps")]
    pub rmsprop_eps: f64,
    #[serde(default = "default_d_steps")]
    pub d_steps_per_g_step: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: default_learning_rate(),
            lambda_gp: default_lambda_gp(),
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            rmsprop_alpha: default_alpha(),
            rmsprop_eps: default_eps(),
            d_steps_per_g_step: default_d_steps(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::BadConfig(format!(
                "learning_rate {} must be finite and non-negative",
                self.learning_rate
            )));
        }
        if !(self.lambda_gp >= 0.0 && self.lambda_gp.is_finite()) {
            return Err(TrainError::BadConfig(format!(
                "lambda_gp {} must be finite and non-negative",
                self.lambda_gp
            )));
        }
        if self.batch_size < 2 {
            return Err(TrainError::BadConfig(format!(
                "batch_size {} too small: the minibatch std layer needs batch statistics",
                self.batch_size
            )));
        }
        if !(self.rmsprop_alpha > 0.0 && self.rmsprop_alpha < 1.0) {
            return Err(TrainError::BadConfig(format!(
                "rmsprop_alpha {} must be in (0, 1)",
                self.rmsprop_alpha
            )));
        }
        if !(self.rmsprop_eps > 0.0) {
            return Err(TrainError::BadConfig(format!(
                "rmsprop_eps {} must be positive",
                self.rmsprop_eps
            )));
        }
        if self.d_steps_per_g_step == 0 {
            return Err(TrainError::BadConfig(
                "d_steps_per_g_step must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
