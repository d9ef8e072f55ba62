//! Actor-critic networks, exploration and the DDPG update.

use ndarray::{concatenate, s, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Adam, Grads, Mlp};
use super::normalizer::Normalizer;
use super::replay::Batch;
use super::AgentConfig;
use crate::error::Result;

/// Bellman target `r + γ·q_next`, clipped to `[clip_lo, 0]`.
pub fn critic_target(r: f64, q_next: f64, gamma: f64, clip_lo: f64) -> f64 {
    (r + gamma * q_next).clamp(clip_lo, 0.0)
}

/// Exploration of [`Ddpg::select_action`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exploration {
    /// Probability of a uniformly random action.
    pub random_eps: f64,
    /// Standard deviation of Gaussian noise added to the actor output.
    pub noise_eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ddpg {
    pub obs_dim: usize,
    pub goal_dim: usize,
    pub act_dim: usize,
    pub gamma: f64,
    pub polyak: f64,
    pub action_l2: f64,
    pub grad_clip: f64,
    /// Targets are clipped to `[-clip_return, 0]`.
    pub clip_return: f64,
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
    pub o_norm: Normalizer,
    pub g_norm: Normalizer,
}

/// Losses of one minibatch update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses {
    pub critic: f64,
    pub actor: f64,
}

impl Ddpg {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        goal_dim: usize,
        act_dim: usize,
        horizon: usize,
        cfg: &AgentConfig,
        rng: &mut R,
    ) -> Ddpg {
        let inp = obs_dim + goal_dim;
        let sizes = |i: usize, o: usize| {
            let mut v = vec![i];
            v.extend(&cfg.hidden);
            v.push(o);
            v
        };
        let actor = Mlp::new(
            &sizes(inp, act_dim),
            Activation::Tanh,
            Activation::Tanh,
            rng,
        );
        let critic = Mlp::new(
            &sizes(inp + act_dim, 1),
            Activation::Tanh,
            Activation::Identity,
            rng,
        );
        Ddpg {
            obs_dim,
            goal_dim,
            act_dim,
            gamma: cfg.gamma,
            polyak: cfg.polyak,
            action_l2: cfg.action_l2,
            grad_clip: cfg.grad_clip,
            clip_return: horizon as f64,
            actor_opt: Adam::new(&actor, cfg.actor_lr),
            critic_opt: Adam::new(&critic, cfg.critic_lr),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            o_norm: Normalizer::new(obs_dim, cfg.norm_eps, cfg.clip_obs),
            g_norm: Normalizer::new(goal_dim, cfg.norm_eps, cfg.clip_obs),
        }
    }

    /// Normalised `[obs | goal]` rows.
    pub fn inputs(&self, obs: &Array2<f64>, goals: &Array2<f64>) -> Array2<f64> {
        let n = obs.nrows();
        let mut x = Array2::zeros((n, self.obs_dim + self.goal_dim));
        let (om, os) = (self.o_norm.mean(), self.o_norm.std());
        let (gm, gs) = (self.g_norm.mean(), self.g_norm.std());
        for i in 0..n {
            let mut row = x.row_mut(i);
            let row = row.as_slice_mut().expect("fresh arrays are contiguous");
            let (ro, rg) = row.split_at_mut(self.obs_dim);
            self.o_norm
                .normalize_into(obs.row(i).as_slice().expect("contiguous"), &om, &os, ro);
            self.g_norm
                .normalize_into(goals.row(i).as_slice().expect("contiguous"), &gm, &gs, rg);
        }
        x
    }

    fn single_input(&self, obs: &[f64], goal: &[f64]) -> Array2<f64> {
        let o = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).expect("row shape");
        let g = Array2::from_shape_vec((1, goal.len()), goal.to_vec()).expect("row shape");
        self.inputs(&o, &g)
    }

    /// Deterministic policy output.
    pub fn act(&self, obs: &[f64], goal: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .actor
            .predict(&self.single_input(obs, goal))?
            .into_raw_vec_and_offset()
            .0)
    }

    /// With probability `random_eps` a uniform action, otherwise the actor
    /// output plus Gaussian noise; always inside `[-1, 1]`.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        obs: &[f64],
        goal: &[f64],
        explore: Option<Exploration>,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let mut a = self.act(obs, goal)?;
        if let Some(e) = explore {
            if e.noise_eps > 0.0 {
                for v in a.iter_mut() {
                    let n: f64 = StandardNormal.sample(rng);
                    *v = (*v + e.noise_eps * n).clamp(-1.0, 1.0);
                }
            }
            if e.random_eps > 0.0 && rng.random::<f64>() < e.random_eps {
                for v in a.iter_mut() {
                    *v = rng.random_range(-1.0..=1.0);
                }
            }
        }
        Ok(a.into_iter().map(|v| v.clamp(-1.0, 1.0)).collect())
    }

    /// Clipped Bellman targets of a batch, from the target networks.
    pub fn targets(&self, b: &Batch) -> Result<Vec<f64>> {
        let x2 = self.inputs(&b.next_obs, &b.goals);
        let a2 = self.actor_target.predict(&x2)?;
        let q2 = self.critic_target.predict(&concatenate![Axis(1), x2, a2])?;
        Ok(b.rewards
            .iter()
            .zip(q2.column(0))
            .map(|(&r, &q)| critic_target(r, q, self.gamma, -self.clip_return))
            .collect())
    }

    /// Mean squared Bellman error and its gradient for the critic.
    pub fn critic_loss_grad(&self, b: &Batch, y: &[f64]) -> Result<(f64, Grads)> {
        let x = self.inputs(&b.obs, &b.goals);
        let cache = self
            .critic
            .forward(&concatenate![Axis(1), x, b.actions.view()])?;
        let q = cache.output();
        let n = b.len() as f64;
        let mut g = Array2::zeros((b.len(), 1));
        let mut loss = 0.0;
        for i in 0..b.len() {
            let d = q[[i, 0]] - y[i];
            loss += d * d;
            g[[i, 0]] = 2.0 * d / n;
        }
        let (grads, _) = self.critic.backward(&cache, &g);
        Ok((loss / n, grads))
    }

    /// Policy loss `−mean Q(s, g, π(s, g)) + l2·mean π²` and its gradient for
    /// the actor.
    pub fn actor_loss_grad(&self, b: &Batch) -> Result<(f64, Grads)> {
        let x = self.inputs(&b.obs, &b.goals);
        let pc = self.actor.forward(&x)?;
        let pi = pc.output();
        let cc = self.critic.forward(&concatenate![Axis(1), x, pi.view()])?;
        let n = b.len() as f64;
        let m = (b.len() * self.act_dim) as f64;
        let q_mean = cc.output().sum() / n;
        let l2 = pi.iter().map(|v| v * v).sum::<f64>() / m;
        let gq = Array2::from_elem((b.len(), 1), -1.0 / n);
        let (_, gin) = self.critic.backward(&cc, &gq);
        let inp = self.obs_dim + self.goal_dim;
        let mut gpi = gin.slice(s![.., inp..]).to_owned();
        gpi.zip_mut_with(pi, |g, &p| *g += 2.0 * self.action_l2 * p / m);
        let (grads, _) = self.actor.backward(&pc, &gpi);
        Ok((-q_mean + self.action_l2 * l2, grads))
    }

    /// One critic and one actor step on a minibatch.
    pub fn train_batch(&mut self, b: &Batch) -> Result<Losses> {
        let y = self.targets(b)?;
        let (lc, mut gc) = self.critic_loss_grad(b, &y)?;
        gc.clip_norm(self.grad_clip);
        self.critic_opt.step(&mut self.critic, &gc);
        let (la, mut ga) = self.actor_loss_grad(b)?;
        ga.clip_norm(self.grad_clip);
        self.actor_opt.step(&mut self.actor, &ga);
        Ok(Losses {
            critic: lc,
            actor: la,
        })
    }

    /// Moves the target networks toward the main ones.
    pub fn update_targets(&mut self) {
        self.actor_target.polyak_from(&self.actor, self.polyak);
        self.critic_target.polyak_from(&self.critic, self.polyak);
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite() && self.critic.is_finite()
    }
}
