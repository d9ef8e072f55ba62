use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize};

use super::Task;
use crate::error::{Error, Result};
use crate::render::CameraSpec;

/// Arguments of [`make_env`](super::make_env).
///
/// Field names match the documented argument names; the spellings
/// `max_episode_step`, `Depth_image` and `num_goal_to_generate` are accepted
/// as aliases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub task: Task,
    #[serde(default)]
    pub joint_control: bool,
    /// Block count; `None` picks the task's smallest legal count.
    #[serde(default)]
    pub num_block: Option<usize>,
    /// Write PNG frames of every step to `render_dir`.
    #[serde(default)]
    pub render: bool,
    #[serde(default = "default_true")]
    pub binary_reward: bool,
    /// Episode length of single-step tasks.
    #[serde(default = "default_steps", alias = "max_episode_step")]
    pub max_episode_steps: usize,
    /// Goal threshold; `None` uses the task default.
    #[serde(default)]
    pub distance_threshold: Option<f64>,
    #[serde(default)]
    pub image_observation: bool,
    #[serde(default, alias = "Depth_image")]
    pub depth_image: bool,
    #[serde(default)]
    pub goal_image: bool,
    #[serde(default)]
    pub visualize_target: bool,
    #[serde(default)]
    pub camera_setup: Vec<CameraSpec>,
    /// Index into `camera_setup`, −1 for the on-hand camera.
    #[serde(default = "default_cam")]
    pub observation_cam_id: i64,
    #[serde(default = "default_cam")]
    pub goal_cam_id: i64,
    #[serde(default)]
    pub use_curriculum: bool,
    #[serde(
        default = "default_goals",
        alias = "num_goal_to_generate",
        deserialize_with = "de_count"
    )]
    pub num_goals_to_generate: u64,
    /// Count a goal as achieved only if every block (and the openness) is
    /// within the threshold on its own.
    #[serde(skip)]
    pub per_block_success: bool,
    #[serde(skip)]
    pub render_dir: Option<PathBuf>,
}

fn default_true() -> bool {
    true
}

fn default_steps() -> usize {
    50
}

fn default_cam() -> i64 {
    -1
}

fn default_goals() -> u64 {
    1_000_000
}

/// Non-negative integer, also written as an integral float such as `1e6`.
fn de_count<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<u64, D::Error> {
    use serde::de::Error as _;
    let v = serde_json::Value::deserialize(d)?;
    if let Some(n) = v.as_u64() {
        return Ok(n);
    }
    match v.as_f64() {
        Some(f) if f >= 0.0 && f.fract() == 0.0 && f <= u64::MAX as f64 => Ok(f as u64),
        _ => Err(D::Error::custom(format!(
            "invalid type: expected a non-negative integer, found {v}"
        ))),
    }
}

impl EnvConfig {
    pub fn new(task: Task) -> Self {
        EnvConfig {
            task,
            joint_control: false,
            num_block: None,
            render: false,
            binary_reward: true,
            max_episode_steps: default_steps(),
            distance_threshold: None,
            image_observation: false,
            depth_image: false,
            goal_image: false,
            visualize_target: false,
            camera_setup: Vec::new(),
            observation_cam_id: default_cam(),
            goal_cam_id: default_cam(),
            use_curriculum: false,
            num_goals_to_generate: default_goals(),
            per_block_success: false,
            render_dir: None,
        }
    }

    pub fn with_blocks(mut self, n: usize) -> Self {
        self.num_block = Some(n);
        self
    }

    /// Parses a JSON object of arguments.
    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        if let Some(t) = v.get("task").and_then(|t| t.as_str()) {
            t.parse::<Task>()?;
        }
        serde_json::from_value(v.clone()).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn threshold(&self) -> f64 {
        self.distance_threshold
            .unwrap_or_else(|| self.task.default_threshold())
    }

    /// Checks the arguments and returns the effective block count.
    pub fn validate(&self) -> Result<usize> {
        let (min, max) = self.task.block_range();
        let n = self.num_block.unwrap_or(min);
        if n < min || n > max {
            return Err(Error::BlockCount {
                task: self.task.name(),
                got: n,
                min,
                max,
            });
        }
        let cams = self.camera_setup.len();
        for id in [self.observation_cam_id, self.goal_cam_id] {
            if id != -1 && (id < 0 || id as usize >= cams) {
                return Err(Error::CameraId {
                    id,
                    available: cams,
                });
            }
        }
        for c in &self.camera_setup {
            c.validate()?;
        }
        let th = self.threshold();
        if !(th.is_finite() && th > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "distance_threshold {th} must be positive"
            )));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::InvalidConfig(
                "max_episode_steps must be at least 1".into(),
            ));
        }
        if self.use_curriculum && self.task.is_multi_step() {
            let levels = self.task.curriculum_levels(n).unwrap_or(1) as u64;
            if self.num_goals_to_generate < levels {
                return Err(Error::InvalidConfig(format!(
                    "num_goals_to_generate {} is below the {levels} curriculum levels",
                    self.num_goals_to_generate
                )));
            }
        }
        Ok(n)
    }
}
