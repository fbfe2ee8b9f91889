use crate::grid::Dims;

/// Errors produced by the registration engine.
#[derive(Debug, thiserror::Error)]
pub enum RegError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: Dims, found: Dims },

    #[error("{levels} pyramid levels would shrink axis of extent {extent} below 4 grid points")]
    LevelsExceedResolution { levels: usize, extent: usize },

    #[error("image too small: every axis needs at least {min} points, got {dims}")]
    TooSmall { dims: Dims, min: usize },

    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParam { name: &'static str, value: f64 },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("no sparse samples with positive certainty")]
    EmptySamples,

    #[error("landmark set is empty")]
    EmptyLandmarks,

    #[error("singular weighted least-squares system")]
    SingularSystem,

    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("unsupported format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RegError {
    /// True for failures caused by the filesystem or malformed files,
    /// as opposed to invalid arguments or inconsistent inputs.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            RegError::Io(_) | RegError::Json(_) | RegError::Image(_) | RegError::Csv(_) | RegError::Format(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, RegError>;
