//! The multi-goal environment: eight tasks over the block world, goal
//! sampling, rewards, observation vectors and optional images.

mod config;
pub mod goals;
mod task;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::EnvConfig;
pub use goals::{compute_reward, goal_achieved, goal_distance};
pub use task::{horizon, Task};

use crate::curriculum::{init_schedule, level_horizon, CurriculumSchedule};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::kinematics::NUM_JOINTS;
use crate::render::{self, block_color, CameraSpec, Image, Rgb, DEFAULT_SIZE, TIP_MARKER_COLOR};
use crate::sim::{
    finger_target, step_world, GripperCommand, Motion, SimParams, WorldState, MAX_DELTA,
};

pub const ROBOT_STATE_DIM: usize = 8;
pub const BLOCK_STATE_DIM: usize = 15;
pub const CHEST_STATE_DIM: usize = 10;
pub const JOINT_STATE_DIM: usize = 2 * NUM_JOINTS;

/// What `reset` and `step` hand back to the agent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub observation: Vec<f64>,
    pub achieved_goal: Vec<f64>,
    pub desired_goal: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation_img: Option<Image>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub goal_img: Option<Image>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Info {
    pub is_success: bool,
    /// Curriculum level of the current goal, if one was drawn from a schedule.
    pub level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: Info,
}

/// One environment session. Single-threaded; run several instances with
/// different seeds for parallelism.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    num_block: usize,
    params: SimParams,
    rng: ChaCha8Rng,
    world: WorldState,
    desired: Vec<f64>,
    t: usize,
    episode_horizon: usize,
    episode: u64,
    ready: bool,
    schedule: Option<CurriculumSchedule>,
    record_goals: bool,
    level: Option<usize>,
    goal_img: Option<Image>,
}

/// Builds an environment seeded with 0.
pub fn make_env(cfg: EnvConfig) -> Result<Env> {
    Env::with_seed(cfg, 0)
}

impl Env {
    pub fn with_seed(cfg: EnvConfig, seed: u64) -> Result<Env> {
        let num_block = cfg.validate()?;
        let schedule = if cfg.use_curriculum && cfg.task.is_multi_step() {
            Some(init_schedule(
                cfg.task,
                num_block,
                cfg.num_goals_to_generate,
            )?)
        } else {
            None
        };
        let params = SimParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world =
            goals::initial_world(cfg.task, num_block, cfg.joint_control, &params, &mut rng)?;
        let desired = goals::achieved_goal(cfg.task, &world);
        let h = horizon(cfg.task, num_block, cfg.max_episode_steps);
        Ok(Env {
            cfg,
            num_block,
            params,
            rng,
            world,
            desired,
            t: 0,
            episode_horizon: h,
            episode: 0,
            ready: false,
            schedule,
            record_goals: true,
            level: None,
            goal_img: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn task(&self) -> Task {
        self.cfg.task
    }

    pub fn num_block(&self) -> usize {
        self.num_block
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn sim_params(&self) -> &SimParams {
        &self.params
    }

    pub fn action_dim(&self) -> usize {
        self.cfg.task.action_dim(self.cfg.joint_control)
    }

    pub fn obs_dim(&self) -> usize {
        ROBOT_STATE_DIM
            + BLOCK_STATE_DIM * self.num_block
            + if self.cfg.task.has_chest() {
                CHEST_STATE_DIM
            } else {
                0
            }
            + if self.cfg.joint_control {
                JOINT_STATE_DIM
            } else {
                0
            }
    }

    pub fn goal_dim(&self) -> usize {
        goals::goal_dim(self.cfg.task, self.num_block)
    }

    /// Episode length of the full task.
    pub fn horizon(&self) -> usize {
        horizon(self.cfg.task, self.num_block, self.cfg.max_episode_steps)
    }

    /// Episode length of the current episode, shorter for easy curriculum
    /// levels.
    pub fn episode_horizon(&self) -> usize {
        self.episode_horizon
    }

    pub fn steps_taken(&self) -> usize {
        self.t
    }

    pub fn threshold(&self) -> f64 {
        self.cfg.threshold()
    }

    pub fn schedule(&self) -> Option<&CurriculumSchedule> {
        self.schedule.as_ref()
    }

    /// Whether goals drawn from the curriculum count toward its quotas.
    /// Evaluation episodes switch this off.
    pub fn set_record_goals(&mut self, record: bool) {
        self.record_goals = record;
    }

    /// Random stream used for initial states and goals.
    pub fn rng(&self) -> &ChaCha8Rng {
        &self.rng
    }

    pub fn set_rng(&mut self, rng: ChaCha8Rng) {
        self.rng = rng;
    }

    /// Replaces the curriculum progress, e.g. when resuming a run.
    pub fn set_schedule(&mut self, schedule: Option<CurriculumSchedule>) {
        self.schedule = schedule;
    }

    pub fn compute_reward(&self, achieved: &[f64], desired: &[f64]) -> Result<f64> {
        compute_reward(achieved, desired, self.threshold(), self.cfg.binary_reward)
    }

    pub fn is_success(&self, achieved: &[f64], desired: &[f64]) -> Result<bool> {
        goal_achieved(
            achieved,
            desired,
            self.threshold(),
            self.cfg.per_block_success,
        )
    }

    /// Starts a new episode.
    pub fn reset(&mut self) -> Result<Observation> {
        let task = self.cfg.task;
        self.world = goals::initial_world(
            task,
            self.num_block,
            self.cfg.joint_control,
            &self.params,
            &mut self.rng,
        )?;
        self.level = None;
        self.episode_horizon = self.horizon();
        match self.schedule.as_mut() {
            Some(s) if !s.is_finished() => {
                let level = s.sample_level(&mut self.rng)?;
                if self.record_goals {
                    s.record_and_update(level)?;
                }
                self.desired = goals::level_goal(task, &self.world, level, &mut self.rng)?;
                self.episode_horizon = level_horizon(level);
                self.level = Some(level);
            }
            _ => self.desired = goals::sample_goal(task, &self.world, &mut self.rng)?,
        }
        self.t = 0;
        self.episode += 1;
        self.ready = true;
        self.goal_img = if self.cfg.goal_image {
            let g = goals::goal_world(task, &self.world, &self.desired);
            Some(render::render(
                &g,
                &self.camera(self.cfg.goal_cam_id, &g),
                self.cfg.depth_image,
                &[],
            )?)
        } else {
            None
        };
        self.write_frame()?;
        self.observe()
    }

    /// Applies one action in `[-1, 1]^d`; components outside are clamped.
    pub fn step(&mut self, action: &[f64]) -> Result<Transition> {
        if !self.ready || self.t >= self.episode_horizon {
            return Err(Error::InvalidAction(
                "episode is over; call reset before stepping".into(),
            ));
        }
        let d = self.action_dim();
        if action.len() != d {
            return Err(Error::Dimension {
                expected: d,
                got: action.len(),
            });
        }
        if action.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidAction(
                "action has non-finite components".into(),
            ));
        }
        let a: Vec<f64> = action.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
        let motion = if self.cfg.joint_control {
            Motion::Joint(std::array::from_fn(|j| a[j] * MAX_DELTA))
        } else {
            Motion::Cartesian(Vec3::new(a[0], a[1], a[2]) * MAX_DELTA)
        };
        let cmd = GripperCommand {
            motion,
            finger_target: self
                .cfg
                .task
                .fingers_enabled()
                .then(|| finger_target(a[d - 1])),
        };
        self.world = step_world(&self.world, &cmd, &self.params)?;
        self.t += 1;
        let obs = self.observe()?;
        let reward = self.compute_reward(&obs.achieved_goal, &obs.desired_goal)?;
        let is_success = self.is_success(&obs.achieved_goal, &obs.desired_goal)?;
        self.write_frame()?;
        Ok(Transition {
            obs,
            reward,
            done: self.t >= self.episode_horizon,
            info: Info {
                is_success,
                level: self.level,
            },
        })
    }

    /// Flat state vector of the current world.
    pub fn state_vector(&self) -> Vec<f64> {
        let w = &self.world;
        let g = &w.gripper;
        let mut s = Vec::with_capacity(self.obs_dim());
        s.extend(g.tip.position.to_array());
        s.extend(g.velocity.to_array());
        s.push(g.finger_width);
        s.push(g.finger_velocity);
        for b in &w.blocks {
            s.extend(b.position().to_array());
            s.extend(b.pose.euler().to_array());
            s.extend((b.position() - g.tip.position).to_array());
            s.extend((b.velocity - g.velocity).to_array());
            s.extend(b.angular_velocity.to_array());
        }
        if let Some(c) = &w.chest {
            s.extend(c.state());
        }
        if self.cfg.joint_control {
            let j = g.joints.unwrap_or_default();
            s.extend(j.q);
            s.extend(j.qd);
        }
        s
    }

    pub fn desired_goal(&self) -> &[f64] {
        &self.desired
    }

    fn observe(&self) -> Result<Observation> {
        let observation_img = if self.cfg.image_observation {
            Some(self.render_view(self.cfg.observation_cam_id)?)
        } else {
            None
        };
        Ok(Observation {
            observation: self.state_vector(),
            achieved_goal: goals::achieved_goal(self.cfg.task, &self.world),
            desired_goal: self.desired.clone(),
            observation_img,
            goal_img: self.goal_img.clone(),
        })
    }

    fn camera(&self, id: i64, world: &WorldState) -> CameraSpec {
        if id < 0 {
            let (w, h) = self
                .cfg
                .camera_setup
                .first()
                .map_or((DEFAULT_SIZE, DEFAULT_SIZE), |c| {
                    (c.render_width, c.render_height)
                });
            render::onhand_camera(world, w, h)
        } else {
            self.cfg.camera_setup[id as usize]
        }
    }

    /// Target markers drawn when `visualize_target` is set.
    pub fn target_markers(&self) -> Vec<(Vec3, Rgb)> {
        if !self.cfg.visualize_target {
            return Vec::new();
        }
        if self.cfg.task == Task::Reach {
            return vec![(Vec3::from_slice(&self.desired), TIP_MARKER_COLOR)];
        }
        self.desired
            .chunks_exact(3)
            .enumerate()
            .map(|(i, t)| (Vec3::from_slice(t), block_color(i)))
            .collect()
    }

    /// Renders the current world through camera `id` (−1 for on-hand).
    pub fn render_view(&self, id: i64) -> Result<Image> {
        let cam = self.camera(id, &self.world);
        render::render(
            &self.world,
            &cam,
            self.cfg.depth_image,
            &self.target_markers(),
        )
    }

    fn frame_dir(&self) -> PathBuf {
        self.cfg
            .render_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("frames"))
    }

    fn write_frame(&self) -> Result<()> {
        if !self.cfg.render {
            return Ok(());
        }
        let dir = self.frame_dir();
        std::fs::create_dir_all(&dir)?;
        let img = self.render_view(self.cfg.observation_cam_id)?;
        img.write_png(&dir.join(format!("ep{:05}_t{:04}.png", self.episode, self.t)))
    }
}
