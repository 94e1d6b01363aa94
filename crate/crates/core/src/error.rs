use crate::model::{AgentId, FrameId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value for {what}: {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("frame {frame_id}: duplicate agent id {agent_id}")]
    DuplicateAgent { frame_id: FrameId, agent_id: AgentId },

    #[error("frame {frame_id}: truth group references unknown agent id {agent_id}")]
    UnknownAgent { frame_id: FrameId, agent_id: AgentId },

    #[error("frame {frame_id}: singleton group containing agent id {agent_id}")]
    SingletonGroup { frame_id: FrameId, agent_id: AgentId },

    #[error("frame {frame_id}: agent id {agent_id} appears in more than one group")]
    OverlappingGroups { frame_id: FrameId, agent_id: AgentId },

    #[error("invalid group set: {0}")]
    InvalidGroupSet(String),

    #[error("invalid relation matrix: {0}")]
    InvalidMatrix(String),

    #[error("index {index} out of range for {len} agents")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("degenerate labels: training set contains only label {0}")]
    DegenerateLabels(u8),

    #[error("degenerate feature: {0} has zero variance in the training set")]
    DegenerateFeature(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("group geometry: {0}")]
    Geometry(String),

    #[error("frame ids differ between detections and truth: {0}")]
    FrameMismatch(String),

    #[error("too many groups for exhaustive matching in frame {frame_id}: {count} (limit 8)")]
    TooManyGroups { frame_id: FrameId, count: usize },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("unsupported document: {0}")]
    Format(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("synthetic scene generation failed: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn parse(path: &std::path::Path, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}
