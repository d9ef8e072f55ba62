//! Rollouts, the epoch loop and greedy evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ddpg::{Ddpg, Exploration};
use super::replay::{future_p, Episode, ReplayBuffer};
use super::AgentConfig;
use crate::env::{Env, EnvConfig};
use crate::error::{Error, Result};

/// Offset separating the environment's random stream from the agent's.
pub const ENV_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

/// Result of one evaluation or training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub episodes_seen: u64,
    pub test_success_rate: f64,
    pub mean_test_return: f64,
    pub train_success_rate: f64,
    pub critic_loss: f64,
    pub actor_loss: f64,
    /// Curriculum level probabilities at the time of evaluation.
    pub level_probs: Option<Vec<f64>>,
}

/// Outcome of a single rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeSummary {
    pub success: bool,
    pub ret: f64,
}

/// Training state of one seed.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub env: Env,
    pub agent: Ddpg,
    pub buffer: ReplayBuffer,
    pub cfg: AgentConfig,
    pub rng: ChaCha8Rng,
    pub seed: u64,
    pub epoch: usize,
    pub episodes_seen: u64,
}

impl Trainer {
    pub fn new(env_cfg: EnvConfig, cfg: AgentConfig, seed: u64) -> Result<Trainer> {
        cfg.validate()?;
        let env = Env::with_seed(env_cfg, seed.wrapping_add(ENV_SEED_OFFSET))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = Ddpg::new(
            env.obs_dim(),
            env.goal_dim(),
            env.action_dim(),
            env.horizon(),
            &cfg,
            &mut rng,
        );
        Ok(Trainer {
            env,
            buffer: ReplayBuffer::new(cfg.buffer_size),
            agent,
            cfg,
            rng,
            seed,
            epoch: 0,
            episodes_seen: 0,
        })
    }

    /// Plays one episode, with exploration noise when `explore` is set.
    pub fn rollout(&mut self, explore: bool) -> Result<(Episode, EpisodeSummary)> {
        let o = self.env.reset()?;
        let n = self.env.episode_horizon();
        let mut ep = Episode {
            obs: Vec::with_capacity(n + 1),
            achieved: Vec::with_capacity(n + 1),
            actions: Vec::with_capacity(n),
            goal: o.desired_goal,
        };
        ep.obs.push(o.observation);
        ep.achieved.push(o.achieved_goal);
        let noise = explore.then_some(Exploration {
            random_eps: self.cfg.random_eps,
            noise_eps: self.cfg.noise_eps,
        });
        let mut sum = EpisodeSummary {
            success: false,
            ret: 0.0,
        };
        for _ in 0..n {
            let last = ep.obs.last().expect("episode starts with an observation");
            let a = self
                .agent
                .select_action(last, &ep.goal, noise, &mut self.rng)?;
            let tr = self.env.step(&a)?;
            sum.ret += tr.reward;
            sum.success = tr.info.is_success;
            ep.actions.push(a);
            ep.obs.push(tr.obs.observation);
            ep.achieved.push(tr.obs.achieved_goal);
        }
        Ok((ep, sum))
    }

    fn update_normalizers(&mut self, ep: &Episode) {
        let n = ep.len();
        let fp = future_p(self.cfg.her_k);
        for t in 0..n {
            self.agent.o_norm.update(&ep.obs[t]);
            if fp > 0.0 && self.rng.random::<f64>() < fp {
                let f = self.rng.random_range(t + 1..=n);
                self.agent.g_norm.update(&ep.achieved[f]);
            } else {
                self.agent.g_norm.update(&ep.goal);
            }
        }
    }

    /// Greedy success rate and mean return over `n` fresh episodes. Goals
    /// drawn from a curriculum do not count toward its quotas.
    pub fn evaluate(&mut self, n: usize) -> Result<(f64, f64)> {
        self.env.set_record_goals(false);
        let mut wins = 0usize;
        let mut ret = 0.0;
        let mut out = Ok(());
        for _ in 0..n {
            match self.rollout(false) {
                Ok((_, s)) => {
                    wins += usize::from(s.success);
                    ret += s.ret;
                }
                Err(e) => {
                    out = Err(e);
                    break;
                }
            }
        }
        self.env.set_record_goals(true);
        out?;
        let n = n.max(1) as f64;
        Ok((wins as f64 / n, ret / n))
    }

    /// One epoch: cycles of rollouts and minibatch updates, then evaluation.
    pub fn run_epoch(&mut self) -> Result<EpochStats> {
        let reward = {
            let th = self.env.threshold();
            let binary = self.env.config().binary_reward;
            move |a: &[f64], d: &[f64]| crate::env::compute_reward(a, d, th, binary).unwrap_or(-1.0)
        };
        let fp = future_p(self.cfg.her_k);
        let mut wins = 0usize;
        let (mut lc, mut la, mut nb) = (0.0, 0.0, 0usize);
        for cycle in 0..self.cfg.cycles_per_epoch {
            for _ in 0..self.cfg.episodes_per_cycle {
                let (ep, s) = self.rollout(true)?;
                wins += usize::from(s.success);
                self.update_normalizers(&ep);
                self.buffer.push(ep);
                self.episodes_seen += 1;
            }
            for _ in 0..self.cfg.batches_per_cycle {
                let b = self
                    .buffer
                    .sample(self.cfg.batch_size, fp, &reward, &mut self.rng);
                let l = self.agent.train_batch(&b)?;
                if !(l.critic.is_finite() && l.actor.is_finite()) || !self.agent.is_finite() {
                    let what = if l.critic.is_finite() {
                        "actor loss"
                    } else {
                        "critic loss"
                    };
                    return Err(Error::NonFinite {
                        what,
                        epoch: self.epoch,
                        cycle,
                    });
                }
                lc += l.critic;
                la += l.actor;
                nb += 1;
            }
            self.agent.update_targets();
        }
        let level_probs = self.env.schedule().map(|s| s.probs().to_vec());
        let (sr, ret) = self.evaluate(self.cfg.test_episodes)?;
        let stats = EpochStats {
            epoch: self.epoch,
            episodes_seen: self.episodes_seen,
            test_success_rate: sr,
            mean_test_return: ret,
            train_success_rate: wins as f64 / self.cfg.episodes_per_epoch() as f64,
            critic_loss: lc / nb.max(1) as f64,
            actor_loss: la / nb.max(1) as f64,
            level_probs,
        };
        self.epoch += 1;
        Ok(stats)
    }
}

/// Trains one seed for `epochs` epochs, calling `on_epoch` after each.
pub fn train(
    env_cfg: &EnvConfig,
    cfg: &AgentConfig,
    seed: u64,
    epochs: usize,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(Trainer, Vec<EpochStats>)> {
    let mut tr = Trainer::new(env_cfg.clone(), cfg.clone(), seed)?;
    let mut stats = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let s = tr.run_epoch()?;
        on_epoch(&s);
        stats.push(s);
    }
    Ok((tr, stats))
}
