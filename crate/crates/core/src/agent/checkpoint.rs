//! Versioned text checkpoints: a header line followed by one JSON document.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ddpg::Ddpg;
use super::train::Trainer;
use super::AgentConfig;
use crate::curriculum::CurriculumSchedule;
use crate::env::EnvConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_HEADER: &str = "multigoal-checkpoint v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub env: EnvConfig,
    pub agent_config: AgentConfig,
    pub seed: u64,
    pub epoch: usize,
    pub episodes_seen: u64,
    /// Parameters, target networks, optimiser moments and normaliser stats.
    pub agent: Ddpg,
    /// Episodes ever written to the replay buffer.
    pub buffer_cursor: u64,
    pub buffer_size: usize,
    pub rng: ChaCha8Rng,
    pub env_rng: ChaCha8Rng,
    pub schedule: Option<CurriculumSchedule>,
}

impl Checkpoint {
    pub fn from_trainer(t: &Trainer) -> Checkpoint {
        Checkpoint {
            env: t.env.config().clone(),
            agent_config: t.cfg.clone(),
            seed: t.seed,
            epoch: t.epoch,
            episodes_seen: t.episodes_seen,
            agent: t.agent.clone(),
            buffer_cursor: t.buffer.stored(),
            buffer_size: t.buffer.size(),
            rng: t.rng.clone(),
            env_rng: t.env.rng().clone(),
            schedule: t.env.schedule().cloned(),
        }
    }

    /// Trainer with the saved networks, statistics, random streams and
    /// curriculum progress. The replay buffer starts empty.
    pub fn into_trainer(self) -> Result<Trainer> {
        let mut t = Trainer::new(self.env, self.agent_config, self.seed)?;
        t.agent = self.agent;
        t.rng = self.rng;
        t.env.set_rng(self.env_rng);
        t.env.set_schedule(self.schedule);
        t.epoch = self.epoch;
        t.episodes_seen = self.episodes_seen;
        Ok(t)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CHECKPOINT_HEADER}")?;
        serde_json::to_writer(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Checkpoint> {
        let mut header = String::new();
        r.read_line(&mut header)?;
        if header.trim_end() != CHECKPOINT_HEADER {
            return Err(Error::Format(format!(
                "expected header '{CHECKPOINT_HEADER}', found '{}'",
                header.trim_end()
            )));
        }
        Ok(serde_json::from_reader(r)?)
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Checkpoint::read_from(BufReader::new(std::fs::File::open(path)?))
    }
}
