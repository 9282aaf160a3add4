use thiserror::Error;

/// Errors raised by the simulation engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate ratio: {0}")]
    DegenerateRatio(String),

    #[error("invalid config at `{field}`: {rule}")]
    InvalidConfig { field: String, rule: String },

    #[error("singular system (|det| = {det:e})")]
    SingularSystem { det: f64 },

    #[error("no power chain from `{from}` reaches strength {threshold} against `{adversary}`")]
    NoChain {
        from: String,
        adversary: String,
        threshold: f64,
    },

    #[error("graph has {nodes} nodes, enumeration is limited to {limit}")]
    TooLarge { nodes: usize, limit: usize },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node `{node}` has no strength recorded against `{adversary}`")]
    MissingStrength { node: String, adversary: String },

    #[error("empty input")]
    EmptyInput,

    #[error("all values are zero")]
    AllZero,

    #[error("configs differ beyond the regime: {0}")]
    ConfigMismatch(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
