use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cutoff mismatch: expected {expected}, got {actual}")]
    CutoffMismatch { expected: usize, actual: usize },

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    /// 1-d root finding for a rotation angle could not bracket or converge.
    #[error("rotation calibration failed at level {level} for angle {theta}: {detail}")]
    Calibration {
        level: usize,
        theta: f64,
        detail: String,
    },

    /// A compiler finished but could not reach the requested quality. The
    /// best result found is attached so callers can still inspect or emit it.
    #[error("{stage} did not reach the target: {detail}")]
    BelowTarget {
        stage: &'static str,
        detail: String,
        best: Box<Partial>,
    },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Best-effort artifact carried by [`Error::BelowTarget`].
#[derive(Debug, Clone)]
pub enum Partial {
    So2Step(crate::state_prep::LadderStep),
    Plan(crate::state_prep::PrepPlan),
    Synthesis(crate::unitary::SynthReport),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
