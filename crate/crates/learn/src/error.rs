use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("degenerate training set: {0}")]
    Degenerate(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("feature width {got} does not match the model width {expected}")]
    Width { expected: usize, got: usize },

    #[error("unknown hyperparameter {key} = {value} for {kind}")]
    Hyperparameter { kind: String, key: String, value: String },

    #[error("model format: {0}")]
    Format(String),

    #[error("unsupported model version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("search failed: every candidate errored\n{0}")]
    SearchFailed(String),

    #[error(transparent)]
    Core(#[from] qutrit_core::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LearnError>;
