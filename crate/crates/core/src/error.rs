use thiserror::Error;

pub type Result<T> = std::result::Result<T, JitError>;

#[derive(Debug, Error)]
pub enum JitError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("nesting violation: {0}")]
    Nesting(String),

    #[error("anchor set is empty")]
    EmptyAnchors,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("budget error: {0}")]
    Budget(String),

    #[error("schedule error: {0}")]
    Schedule(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("velocity field contract violated: {0}")]
    FieldContract(String),

    #[error("no coarser stage to transition from")]
    NoStage,

    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<JitError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl JitError {
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            e @ JitError::AtStep { .. } => e,
            e => JitError::AtStep {
                step,
                source: Box::new(e),
            },
        }
    }
}
