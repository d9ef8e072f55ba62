//! Multi-goal manipulation environments, a curriculum goal generator and a
//! DDPG+HER agent, all on top of a small deterministic block-world simulator.

pub mod agent;
pub mod curriculum;
pub mod env;
pub mod error;
pub mod geom;
pub mod harness;
pub mod kinematics;
pub mod render;
pub mod sim;

pub use agent::{AgentConfig, Checkpoint, Ddpg, Trainer};
pub use curriculum::{init_schedule, CurriculumSchedule};
pub use env::{compute_reward, make_env, Env, EnvConfig, Observation, Task, Transition};
pub use error::{Error, Result};
pub use geom::{clamp_workspace, Aabb, Pose, Vec3, Workspace, TABLE_CENTRE};
pub use kinematics::{JointConfig, KukaChain};
pub use sim::{step_world, GripperCommand, WorldState};
