//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibError {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("confidence {value} outside [0,1]")]
    InvalidConfidence { value: f64 },

    #[error("invalid binning: {0}")]
    InvalidBinning(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("class index {index} out of range for {len} classes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("prompt template missing keys: {}", .0.join(", "))]
    MissingPlaceholders(Vec<String>),

    #[error("no scripted fixture for query '{query_id}', agent '{agent}', kind '{kind}'")]
    FixtureGap { query_id: String, agent: String, kind: String },

    #[error("transport failure for agent '{agent}': {message}")]
    Transport { agent: String, message: String },

    #[error("semantic judge failed on pair ('{left}', '{right}'): {message}")]
    JudgeFailure { left: String, right: String, message: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CalibError>;

impl CalibError {
    /// Process exit code for the CLI: 1 input, 2 transport, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CalibError::Transport { .. } => 2,
            CalibError::Internal(_) => 3,
            _ => 1,
        }
    }
}
