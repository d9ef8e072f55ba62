use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("joint {joint} angle {angle} outside limit ±{limit}")]
    JointLimit {
        joint: usize,
        angle: f64,
        limit: f64,
    },

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown task '{0}'")]
    UnknownTask(String),

    #[error("num_block {got} out of range for task '{task}' (allowed {min}..={max})")]
    BlockCount {
        task: &'static str,
        got: usize,
        min: usize,
        max: usize,
    },

    #[error("camera id {id} invalid for {available} configured camera(s)")]
    CameraId { id: i64, available: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("goal sampling failed after {0} attempts")]
    GoalSampling(usize),

    #[error("degenerate camera: eye and target coincide")]
    DegenerateCamera,

    #[error("curriculum schedule complete")]
    ScheduleComplete,

    #[error("curriculum level {0} is not active")]
    InactiveLevel(usize),

    #[error("non-finite {what} at epoch {epoch}, cycle {cycle}")]
    NonFinite {
        what: &'static str,
        epoch: usize,
        cycle: usize,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Png(#[from] png::EncodingError),
}

impl Error {
    /// Stable identifier used in wire-protocol error replies.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::JointLimit { .. } => "joint_limit",
            Error::InvalidAction(_) => "invalid_action",
            Error::InvalidConfig(_) => "invalid_config",
            Error::UnknownTask(_) => "unknown_task",
            Error::BlockCount { .. } => "block_count",
            Error::CameraId { .. } => "camera_id",
            Error::Dimension { .. } => "dimension",
            Error::GoalSampling(_) => "goal_sampling",
            Error::DegenerateCamera => "degenerate_camera",
            Error::ScheduleComplete => "schedule_complete",
            Error::InactiveLevel(_) => "inactive_level",
            Error::NonFinite { .. } => "non_finite",
            Error::Shape(_) => "shape",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Png(_) => "png",
        }
    }
}
