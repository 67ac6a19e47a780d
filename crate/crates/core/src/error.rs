use thiserror::Error;

/// Invalid trial or course configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("direction set is empty")]
    EmptyDirectionSet,
    #[error("direction set contains a repeated or non-finite direction")]
    BadDirection,
    #[error("magnitude {0} is outside (0, 1] or not above the deadzone")]
    BadMagnitude(f64),
    #[error("repeats per target must be at least 1")]
    ZeroRepeats,
    #[error("prompt duration range [{0}, {1}] is invalid")]
    BadDurationRange(f64, f64),
    #[error("{name} must be {requirement}, got {value}")]
    OutOfRange { name: &'static str, requirement: &'static str, value: f64 },
    #[error("trajectory trials require a course")]
    MissingCourse,
    #[error("course is invalid: {0}")]
    BadCourse(String),
    #[error("unsupported config version {0}")]
    UnsupportedVersion(u32),
}

/// Failures while computing outcome measures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("trial has no prompts")]
    NoPrompts,
    #[error("prompt {0} does not match the schedule")]
    PromptMismatch(usize),
    #[error("sample {index} at t={t} is out of order")]
    OutOfOrder { index: usize, t: f64 },
    #[error("trial has no samples")]
    NoSamples,
    #[error("trajectory sample {0} lacks pose data")]
    MissingPose(usize),
    #[error(transparent)]
    Config(#[from] ConfigError),
}
