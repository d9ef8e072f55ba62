use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Reach,
    Push,
    Slide,
    PickAndPlace,
    BlockStack,
    BlockRearrange,
    ChestPickAndPlace,
    ChestPush,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::Reach,
        Task::Push,
        Task::Slide,
        Task::PickAndPlace,
        Task::BlockStack,
        Task::BlockRearrange,
        Task::ChestPickAndPlace,
        Task::ChestPush,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Reach => "reach",
            Task::Push => "push",
            Task::Slide => "slide",
            Task::PickAndPlace => "pick_and_place",
            Task::BlockStack => "block_stack",
            Task::BlockRearrange => "block_rearrange",
            Task::ChestPickAndPlace => "chest_pick_and_place",
            Task::ChestPush => "chest_push",
        }
    }

    pub fn is_multi_step(self) -> bool {
        matches!(
            self,
            Task::BlockStack | Task::BlockRearrange | Task::ChestPickAndPlace | Task::ChestPush
        )
    }

    pub fn has_chest(self) -> bool {
        matches!(self, Task::ChestPickAndPlace | Task::ChestPush)
    }

    /// Inclusive range of legal block counts.
    pub fn block_range(self) -> (usize, usize) {
        match self {
            Task::Reach => (0, 0),
            Task::Push | Task::Slide | Task::PickAndPlace => (1, 1),
            Task::BlockStack | Task::BlockRearrange => (2, 5),
            Task::ChestPickAndPlace | Task::ChestPush => (1, 5),
        }
    }

    /// Whether the finger channel drives the fingers.
    pub fn fingers_enabled(self) -> bool {
        matches!(
            self,
            Task::PickAndPlace | Task::ChestPickAndPlace | Task::BlockStack
        )
    }

    /// Whether the action vector carries a finger channel.
    pub fn has_finger_channel(self) -> bool {
        self.fingers_enabled() || self == Task::Slide
    }

    /// Picking tasks start with the tip raised above the table centre.
    pub fn starts_raised(self) -> bool {
        matches!(
            self,
            Task::Reach | Task::PickAndPlace | Task::ChestPickAndPlace | Task::BlockStack
        )
    }

    pub fn action_dim(self, joint_control: bool) -> usize {
        let motion = if joint_control { 7 } else { 3 };
        motion + usize::from(self.has_finger_channel())
    }

    pub fn default_threshold(self) -> f64 {
        if self.has_chest() {
            0.1
        } else {
            0.05
        }
    }

    /// Number of curriculum levels, `None` for single-step tasks.
    pub fn curriculum_levels(self, num_block: usize) -> Option<usize> {
        match self {
            Task::BlockStack | Task::BlockRearrange => Some(num_block),
            Task::ChestPickAndPlace | Task::ChestPush => Some(num_block + 1),
            _ => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownTask(s.to_string()))
    }
}

impl Serialize for Task {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Task {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Episode length for a task: the step budget of its hardest curriculum
/// level for multi-step tasks, `single_step` otherwise.
pub fn horizon(task: Task, num_block: usize, single_step: usize) -> usize {
    match task.curriculum_levels(num_block) {
        Some(levels) => crate::curriculum::level_horizon(levels - 1),
        None => single_step,
    }
}
