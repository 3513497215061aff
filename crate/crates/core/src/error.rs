use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grammar: {0}")]
    Grammar(String),

    #[error("cycle detected in grammar at node `{0}`")]
    GrammarCycle(String),

    #[error("probabilities of `{node}` sum to {sum}, expected 1")]
    BadProbabilities { node: String, sum: f64 },

    #[error("no size model for terminal category `{0}`")]
    MissingSizeModel(String),

    #[error("derivation produced more than {0} objects")]
    RunawayDerivation(usize),

    #[error("address value `{value}` is outside the prior support of slot `{slot}`")]
    AddressOutOfSupport { slot: String, value: String },

    #[error("no training scenes")]
    NoTrainingScenes,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no catalog entry for category `{0}`")]
    NoCatalogEntry(String),

    #[error("support cycle involving instance {0}")]
    SupportCycle(u32),

    #[error("instance {instance} penetrates its parent by {overlap} m")]
    Penetration { instance: u32, overlap: f64 },

    #[error("empty attribute range `{0}`")]
    EmptyRange(String),

    #[error("camera: {0}")]
    Camera(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Serde(#[from] serde_json::Error),

    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
