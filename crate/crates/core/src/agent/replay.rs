//! Episode replay with hindsight goal relabelling ("future" strategy).

use std::collections::VecDeque;

use ndarray::Array2;
use rand::Rng;

/// One recorded episode. `obs` and `achieved` hold `len() + 1` entries:
/// entry `t + 1` is what action `t` led to.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub obs: Vec<Vec<f64>>,
    pub achieved: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub goal: Vec<f64>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Transition `t` evaluated against `goal`.
    pub fn transition(
        &self,
        t: usize,
        goal: &[f64],
        reward: &dyn Fn(&[f64], &[f64]) -> f64,
    ) -> Transition {
        Transition {
            state: self.obs[t].clone(),
            action: self.actions[t].clone(),
            reward: reward(&self.achieved[t + 1], goal),
            next_state: self.obs[t + 1].clone(),
            desired_goal: goal.to_vec(),
            achieved_goal_next: self.achieved[t + 1].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub desired_goal: Vec<f64>,
    pub achieved_goal_next: Vec<f64>,
}

/// Original transitions plus `k` copies each whose goal is the goal achieved
/// in a uniformly drawn later state `t' ∈ (t, T]`. The final state has no
/// outgoing transition and so yields nothing.
pub fn her_relabel<R: Rng + ?Sized>(
    ep: &Episode,
    k: usize,
    reward: &dyn Fn(&[f64], &[f64]) -> f64,
    rng: &mut R,
) -> Vec<Transition> {
    let n = ep.len();
    let mut out = Vec::with_capacity(n * (k + 1));
    for t in 0..n {
        out.push(ep.transition(t, &ep.goal, reward));
        for _ in 0..k {
            let f = rng.random_range(t + 1..=n);
            out.push(ep.transition(t, &ep.achieved[f], reward));
        }
    }
    out
}

/// Every transition `her_relabel` can emit: the originals and one copy per
/// pair `(t, t')` with `t < t' ≤ T`.
pub fn her_relabel_all(ep: &Episode, reward: &dyn Fn(&[f64], &[f64]) -> f64) -> Vec<Transition> {
    let n = ep.len();
    let mut out = Vec::new();
    for t in 0..n {
        out.push(ep.transition(t, &ep.goal, reward));
        for f in t + 1..=n {
            out.push(ep.transition(t, &ep.achieved[f], reward));
        }
    }
    out
}

/// A minibatch in raw (unnormalised) coordinates, one row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: Array2<f64>,
    pub next_obs: Array2<f64>,
    pub goals: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

/// Whole-episode ring buffer bounded by a transition count.
#[derive(Debug, Clone, Default)]
pub struct ReplayBuffer {
    episodes: VecDeque<Episode>,
    capacity: usize,
    size: usize,
    stored: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            episodes: VecDeque::new(),
            capacity,
            size: 0,
            stored: 0,
        }
    }

    /// Transitions currently held.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Episodes ever stored, including evicted ones.
    pub fn stored(&self) -> u64 {
        self.stored
    }

    pub fn push(&mut self, ep: Episode) {
        self.size += ep.len();
        self.stored += 1;
        self.episodes.push_back(ep);
        while self.size > self.capacity && self.episodes.len() > 1 {
            if let Some(old) = self.episodes.pop_front() {
                self.size -= old.len();
            }
        }
    }

    /// Samples `n` transitions: episode and step uniform, and with
    /// probability `future_p` the goal replaced by one achieved in a later
    /// state of the same episode. Rewards are recomputed for the chosen goal.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        n: usize,
        future_p: f64,
        reward: &dyn Fn(&[f64], &[f64]) -> f64,
        rng: &mut R,
    ) -> Batch {
        let first = &self.episodes[0];
        let (od, gd, ad) = (first.obs[0].len(), first.goal.len(), first.actions[0].len());
        let mut b = Batch {
            obs: Array2::zeros((n, od)),
            next_obs: Array2::zeros((n, od)),
            goals: Array2::zeros((n, gd)),
            actions: Array2::zeros((n, ad)),
            rewards: Vec::with_capacity(n),
        };
        for i in 0..n {
            let ep = &self.episodes[rng.random_range(0..self.episodes.len())];
            let len = ep.len();
            let t = rng.random_range(0..len);
            let relabel = future_p > 0.0 && rng.random::<f64>() < future_p;
            let goal = if relabel {
                &ep.achieved[rng.random_range(t + 1..=len)]
            } else {
                &ep.goal
            };
            b.obs.row_mut(i).assign(&ndarray::aview1(&ep.obs[t]));
            b.next_obs
                .row_mut(i)
                .assign(&ndarray::aview1(&ep.obs[t + 1]));
            b.goals.row_mut(i).assign(&ndarray::aview1(goal));
            b.actions
                .row_mut(i)
                .assign(&ndarray::aview1(&ep.actions[t]));
            b.rewards.push(reward(&ep.achieved[t + 1], goal));
        }
        b
    }
}

/// Fraction of samples relabelled for `k` future goals per original.
pub fn future_p(k: usize) -> f64 {
    1.0 - 1.0 / (1.0 + k as f64)
}
