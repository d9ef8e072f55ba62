use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// DDPG+HER hyperparameters and the epoch layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    /// Target networks keep this fraction of their old weights per update.
    pub polyak: f64,
    pub batch_size: usize,
    /// Replay capacity in transitions.
    pub buffer_size: usize,
    /// Relabelled goals per original; 0 disables hindsight replay.
    pub her_k: usize,
    pub random_eps: f64,
    pub noise_eps: f64,
    pub action_l2: f64,
    pub clip_obs: f64,
    pub norm_eps: f64,
    pub grad_clip: f64,
    pub cycles_per_epoch: usize,
    pub episodes_per_cycle: usize,
    pub batches_per_cycle: usize,
    pub test_episodes: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            hidden: vec![256, 256, 256],
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            gamma: 0.98,
            polyak: 0.95,
            batch_size: 128,
            buffer_size: 1_000_000,
            her_k: 4,
            random_eps: 0.2,
            noise_eps: 0.2,
            action_l2: 1.0,
            clip_obs: 5.0,
            norm_eps: 0.01,
            grad_clip: 5.0,
            cycles_per_epoch: 50,
            episodes_per_cycle: 2,
            batches_per_cycle: 40,
            test_episodes: 20,
        }
    }
}

impl AgentConfig {
    /// Two hidden layers of 64 units, sized for a single CPU core.
    pub fn desk() -> Self {
        AgentConfig {
            hidden: vec![64, 64],
            ..AgentConfig::default()
        }
    }

    pub fn episodes_per_epoch(&self) -> usize {
        self.cycles_per_epoch * self.episodes_per_cycle
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layer sizes must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.polyak) {
            return bad("polyak must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.random_eps) || self.noise_eps < 0.0 {
            return bad("exploration rates out of range");
        }
        if self.batch_size == 0 || self.buffer_size == 0 {
            return bad("batch_size and buffer_size must be positive");
        }
        if self.cycles_per_epoch == 0 || self.episodes_per_cycle == 0 {
            return bad("an epoch needs at least one cycle and one episode");
        }
        if !(self.actor_lr > 0.0
            && self.critic_lr > 0.0
            && self.clip_obs > 0.0
            && self.grad_clip > 0.0)
        {
            return bad("learning rates and clips must be positive");
        }
        Ok(())
    }
}
