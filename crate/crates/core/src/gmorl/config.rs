use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momdp::{ContextSpace, MomdpConfig};
use crate::nn::Activation;
use crate::sim::SimConfig;

/// Hyper-parameters of the domain-randomised discrete SAC trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerConfig {
    /// N_ep
    pub epochs: usize,
    /// N_g; environment `i` of every epoch uses preference `i mod |grid|`.
    pub envs_per_epoch: usize,
    /// N_up, run after every environment's rollout.
    pub updates_per_env: usize,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub gamma: f64,
    /// Initial entropy temperature alpha_H.
    pub alpha: f64,
    pub lr_policy: f64,
    pub lr_q: f64,
    pub lr_alpha: f64,
    /// Target smoothing coefficient beta.
    pub target_smoothing: f64,
    /// Target entropy is `coef * ln(E + 1)` per state.
    pub target_entropy_coef: f64,
    /// Episodes of a random policy used to rebalance the reward scale
    /// before training (0 keeps the configured scale).
    pub calibration_episodes: usize,
    pub encoder_widths: Vec<usize>,
    pub trunk_widths: Vec<usize>,
    pub head_widths: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        Self {
            epochs: 4000,
            envs_per_epoch: 64,
            updates_per_env: 10,
            batch_size: 4096,
            replay_capacity: 100_000,
            gamma: 0.95,
            alpha: 0.05,
            lr_policy: 1e-6,
            lr_q: 1e-6,
            lr_alpha: 0.0,
            target_smoothing: 0.005,
            target_entropy_coef: 0.6,
            calibration_episodes: 0,
            encoder_widths: vec![64, 64],
            trunk_widths: vec![128, 128],
            head_widths: vec![64],
            activation: Activation::Relu,
        }
    }
}

impl TrainerConfig {
    /// Laptop-scale settings: 200 epochs of 8 environments with smaller
    /// networks, batches, raised learning rates and a warmer temperature
    /// (0.1 keeps ties between equally cheap servers split).
    pub fn desk() -> Self {
        Self {
            epochs: 200,
            envs_per_epoch: 8,
            batch_size: 64,
            alpha: 0.1,
            lr_policy: 3e-4,
            lr_q: 1e-3,
            target_smoothing: 0.01,
            calibration_episodes: 16,
            encoder_widths: vec![32],
            trunk_widths: vec![64],
            head_widths: vec![32],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("envs_per_epoch", self.envs_per_epoch),
            ("batch_size", self.batch_size),
            ("replay_capacity", self.replay_capacity),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Domain(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Domain(format!("gamma must be in [0, 1), got {}", self.gamma)));
        }
        if !(self.target_smoothing > 0.0 && self.target_smoothing <= 1.0) {
            return Err(Error::Domain(format!(
                "target_smoothing must be in (0, 1], got {}",
                self.target_smoothing
            )));
        }
        for (name, v) in [
            ("lr_policy", self.lr_policy),
            ("lr_q", self.lr_q),
            ("lr_alpha", self.lr_alpha),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be a finite non-negative number")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Everything the trainer needs besides its own hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub sim: SimConfig,
    pub momdp: MomdpConfig,
    pub space: ContextSpace,
}

impl Problem {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.space.validate()?;
        if self.space.max_edges() > self.momdp.encoding.max_edges {
            return Err(Error::Domain(format!(
                "context space reaches {} edges but the encoding supports {}",
                self.space.max_edges(),
                self.momdp.encoding.max_edges
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainerConfig::default().validate().unwrap();
        TrainerConfig::desk().validate().unwrap();
        let bad = TrainerConfig {
            gamma: 1.0,
            ..TrainerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainerConfig {
            target_smoothing: 0.0,
            ..TrainerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainerConfig {
            lr_q: -1.0,
            ..TrainerConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
