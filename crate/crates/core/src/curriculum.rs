//! Goal-difficulty curriculum for the multi-step tasks.
//!
//! Training goals are split evenly over difficulty levels. The easiest level
//! starts with probability 1. Once a level has generated more than half its
//! quota it shares probability 0.5/0.5 with the next unfinished level; once it
//! is exhausted the next level takes over. At most two levels are active.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Task;
use crate::error::{Error, Result};

/// Episode length for goals of curriculum `level`.
pub fn level_horizon(level: usize) -> usize {
    50 + 25 * level
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumSchedule {
    quotas: Vec<u64>,
    generated: Vec<u64>,
    probs: Vec<f64>,
}

impl CurriculumSchedule {
    /// Schedule with `num_levels` levels sharing `total_goals`; the remainder
    /// of an uneven split goes to the last level.
    pub fn new(num_levels: usize, total_goals: u64) -> Result<Self> {
        if num_levels == 0 || total_goals < num_levels as u64 {
            return Err(Error::InvalidConfig(format!(
                "{total_goals} goals cannot cover {num_levels} curriculum levels"
            )));
        }
        let base = total_goals / num_levels as u64;
        let mut quotas = vec![base; num_levels];
        quotas[num_levels - 1] += total_goals - base * num_levels as u64;
        let mut s = CurriculumSchedule {
            quotas,
            generated: vec![0; num_levels],
            probs: vec![0.0; num_levels],
        };
        s.refresh();
        Ok(s)
    }

    pub fn num_levels(&self) -> usize {
        self.quotas.len()
    }

    pub fn quotas(&self) -> &[u64] {
        &self.quotas
    }

    pub fn generated(&self) -> &[u64] {
        &self.generated
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_finished(&self) -> bool {
        self.generated.iter().zip(&self.quotas).all(|(g, q)| g >= q)
    }

    fn unfinished_from(&self, start: usize) -> Option<usize> {
        (start..self.num_levels()).find(|&l| self.generated[l] < self.quotas[l])
    }

    fn refresh(&mut self) {
        self.probs.iter_mut().for_each(|p| *p = 0.0);
        let Some(lo) = self.unfinished_from(0) else {
            return;
        };
        let past_half = 2 * self.generated[lo] > self.quotas[lo];
        match self.unfinished_from(lo + 1) {
            Some(next) if past_half => {
                self.probs[lo] = 0.5;
                self.probs[next] = 0.5;
            }
            _ => self.probs[lo] = 1.0,
        }
    }

    /// Counts one generated goal at `level` and updates the probabilities.
    pub fn record_and_update(&mut self, level: usize) -> Result<()> {
        if self.is_finished() {
            return Err(Error::ScheduleComplete);
        }
        if level >= self.num_levels() || self.probs[level] == 0.0 {
            return Err(Error::InactiveLevel(level));
        }
        self.generated[level] += 1;
        self.refresh();
        Ok(())
    }

    /// Categorical draw from the current level probabilities.
    pub fn sample_level<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.is_finished() {
            return Err(Error::ScheduleComplete);
        }
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = 0;
        for (l, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            acc += p;
            last = l;
            if u < acc {
                return Ok(l);
            }
        }
        Ok(last)
    }
}

/// Schedule for a multi-step task with `num_block` blocks.
pub fn init_schedule(task: Task, num_block: usize, total_goals: u64) -> Result<CurriculumSchedule> {
    let levels = task
        .curriculum_levels(num_block)
        .ok_or_else(|| Error::InvalidConfig(format!("task '{task}' has no curriculum")))?;
    CurriculumSchedule::new(levels, total_goals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn chest_push_two_blocks() {
        let s = init_schedule(Task::ChestPush, 2, 300).unwrap();
        assert_eq!(s.quotas(), &[100, 100, 100]);
        assert_eq!(s.probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn level_counts() {
        assert_eq!(
            init_schedule(Task::BlockStack, 3, 30).unwrap().num_levels(),
            3
        );
        assert_eq!(
            init_schedule(Task::BlockRearrange, 2, 10).unwrap().quotas(),
            &[5, 5]
        );
        assert_eq!(
            init_schedule(Task::ChestPush, 2, 301).unwrap().quotas(),
            &[100, 100, 101]
        );
        assert!(init_schedule(Task::Reach, 0, 10).is_err());
        assert!(init_schedule(Task::ChestPush, 2, 2).is_err());
    }

    #[test]
    fn half_quota_opens_next_level() {
        let mut s = CurriculumSchedule::new(3, 300).unwrap();
        for _ in 0..50 {
            s.record_and_update(0).unwrap();
        }
        assert_eq!(s.probs(), &[1.0, 0.0, 0.0]);
        s.record_and_update(0).unwrap();
        assert_eq!(s.probs(), &[0.5, 0.5, 0.0]);
    }

    #[test]
    fn exhausted_level_hands_over() {
        let mut s = CurriculumSchedule::new(3, 300).unwrap();
        for _ in 0..51 {
            s.record_and_update(0).unwrap();
        }
        for _ in 0..10 {
            s.record_and_update(1).unwrap();
        }
        for _ in 0..49 {
            s.record_and_update(0).unwrap();
        }
        assert_eq!(s.generated(), &[100, 10, 0]);
        assert_eq!(s.probs(), &[0.0, 1.0, 0.0]);
        assert!(matches!(
            s.record_and_update(0),
            Err(Error::InactiveLevel(0))
        ));
    }

    #[test]
    fn finished_schedule_errors() {
        let mut s = CurriculumSchedule::new(1, 2).unwrap();
        s.record_and_update(0).unwrap();
        s.record_and_update(0).unwrap();
        assert!(s.is_finished());
        assert_eq!(s.probs(), &[0.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            s.sample_level(&mut rng),
            Err(Error::ScheduleComplete)
        ));
        assert!(matches!(
            s.record_and_update(0),
            Err(Error::ScheduleComplete)
        ));
    }

    #[test]
    fn degenerate_and_even_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = CurriculumSchedule::new(3, 300).unwrap();
        assert!((0..1000).all(|_| s.sample_level(&mut rng).unwrap() == 0));
        let mut s = s;
        for _ in 0..51 {
            s.record_and_update(0).unwrap();
        }
        let n = 100_000;
        let ones = (0..n)
            .filter(|_| s.sample_level(&mut rng).unwrap() == 1)
            .count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    /// Event-driven restatement of the procedure: probabilities only change
    /// when a level passes half its quota or completes it.
    struct Oracle {
        quota: Vec<u64>,
        gen: Vec<u64>,
        prob: Vec<f64>,
    }

    impl Oracle {
        fn new(quota: Vec<u64>) -> Self {
            let mut prob = vec![0.0; quota.len()];
            prob[0] = 1.0;
            let gen = vec![0; quota.len()];
            Oracle { quota, gen, prob }
        }

        fn half(&self, l: usize) -> bool {
            2 * self.gen[l] > self.quota[l]
        }

        fn record(&mut self, l: usize) {
            let was_half = self.half(l);
            self.gen[l] += 1;
            let n = self.quota.len();
            let next_open = |o: &Oracle, from: usize| (from..n).find(|&k| o.gen[k] < o.quota[k]);
            if self.gen[l] == self.quota[l] {
                self.prob[l] = 0.0;
                let lo = next_open(self, 0);
                if let Some(lo) = lo {
                    for p in self.prob.iter_mut() {
                        *p = 0.0;
                    }
                    match next_open(self, lo + 1) {
                        Some(nx) if self.half(lo) => {
                            self.prob[lo] = 0.5;
                            self.prob[nx] = 0.5;
                        }
                        _ => self.prob[lo] = 1.0,
                    }
                }
            } else if !was_half && self.half(l) && self.prob[l] == 1.0 {
                if let Some(nx) = next_open(self, l + 1) {
                    self.prob[l] = 0.5;
                    self.prob[nx] = 0.5;
                }
            }
        }
    }

    #[test]
    fn full_run_generates_every_quota() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = init_schedule(Task::ChestPush, 2, 300).unwrap();
        let mut episodes = 0;
        while !s.is_finished() {
            let l = s.sample_level(&mut rng).unwrap();
            s.record_and_update(l).unwrap();
            episodes += 1;
        }
        assert_eq!(episodes, 300);
        assert_eq!(s.generated(), &[100, 100, 100]);
    }

    proptest! {
        #[test]
        fn matches_event_oracle(levels in 1usize..6, per in 1u64..40, extra in 0u64..7, seed in any::<u64>()) {
            let total = per * levels as u64 + extra % levels as u64;
            let mut s = CurriculumSchedule::new(levels, total).unwrap();
            let mut o = Oracle::new(s.quotas().to_vec());
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut first_seen = vec![None; levels];
            let mut count_at = vec![0u64; levels];
            let mut ep = 0u64;
            while !s.is_finished() {
                prop_assert_eq!(s.probs(), &o.prob[..]);
                let sum: f64 = s.probs().iter().sum();
                prop_assert_eq!(sum, 1.0);
                prop_assert!(s.probs().iter().all(|&p| p == 0.0 || p == 0.5 || p == 1.0));
                let l = s.sample_level(&mut rng).unwrap();
                if first_seen[l].is_none() {
                    first_seen[l] = Some(ep);
                    if l > 0 {
                        // monotone difficulty: previous level past half
                        prop_assert!(2 * count_at[l - 1] > s.quotas()[l - 1]);
                    }
                }
                s.record_and_update(l).unwrap();
                o.record(l);
                count_at[l] += 1;
                ep += 1;
            }
            prop_assert_eq!(ep, total);
            prop_assert_eq!(s.generated(), s.quotas());
            prop_assert!(s.probs().iter().all(|&p| p == 0.0));
        }
    }
}
