//! DDPG with hindsight experience replay on hand-differentiated MLPs.

mod checkpoint;
mod config;
pub mod ddpg;
pub mod mlp;
pub mod normalizer;
pub mod replay;
pub mod train;

pub use checkpoint::{Checkpoint, CHECKPOINT_HEADER};
pub use config::AgentConfig;
pub use ddpg::{critic_target, Ddpg, Exploration, Losses};
pub use mlp::{Activation, Adam, Grads, Mlp};
pub use normalizer::Normalizer;
pub use replay::{her_relabel, her_relabel_all, Batch, Episode, ReplayBuffer, Transition};
pub use train::{train, EpisodeSummary, EpochStats, Trainer};
