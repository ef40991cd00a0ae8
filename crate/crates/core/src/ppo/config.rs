use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    /// GAE mixing parameter between one-step TD (0) and Monte Carlo (1).
    pub lambda: f64,
    pub clip: f64,
    pub update_epochs: usize,
    pub minibatch_size: usize,
    pub num_actors: usize,
    pub horizon: usize,
    pub stepsize: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub total_env_steps: u64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.1,
            update_epochs: 10,
            minibatch_size: 32,
            num_actors: 16,
            horizon: 128,
            stepsize: 3e-4,
            value_coef: 0.5,
            entropy_coef: 0.01,
            total_env_steps: 1_000_000,
        }
    }
}

impl PpoConfig {
    pub fn steps_per_update(&self) -> u64 {
        (self.num_actors * self.horizon) as u64
    }

    /// Whole updates that fit in `total_env_steps`.
    pub fn num_updates(&self) -> u64 {
        self.total_env_steps / self.steps_per_update()
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("ppo.{name} must be in (0,1], got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("lambda", self.lambda)?;
        if !(self.clip > 0.0) {
            return Err(Error::Config(format!("ppo.clip must be positive, got {}", self.clip)));
        }
        if !(self.stepsize > 0.0) {
            return Err(Error::Config(format!(
                "ppo.stepsize must be positive, got {}",
                self.stepsize
            )));
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 {
            return Err(Error::Config("ppo coefficients must be non-negative".into()));
        }
        if self.update_epochs == 0 || self.minibatch_size == 0 || self.num_actors == 0 || self.horizon == 0 {
            return Err(Error::Config(
                "ppo.update_epochs, minibatch_size, num_actors and horizon must be positive".into(),
            ));
        }
        if !(self.num_actors * self.horizon).is_multiple_of(self.minibatch_size) {
            return Err(Error::Config(format!(
                "num_actors * horizon = {} is not divisible by minibatch_size {}",
                self.num_actors * self.horizon,
                self.minibatch_size
            )));
        }
        Ok(())
    }
}
