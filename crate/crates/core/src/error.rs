use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty distribution")]
    EmptyDistribution,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("loss node is not a scalar (shape {0:?})")]
    NotScalar(Vec<usize>),

    #[error("dropout rate must be in [0, 1), got {0}")]
    DropoutRate(f64),

    #[error("token id {id} out of range for vocabulary of size {vocab}")]
    TokenOutOfRange { id: usize, vocab: usize },

    #[error("unknown parameter `{0}`")]
    UnknownParam(String),

    #[error("'{0}' is not inflectable")]
    NotInflectable(String),

    #[error("'{0}' is not a reflexive pronoun")]
    NotReflexive(String),

    #[error("unknown construction tag `{0}`")]
    UnknownConstruction(String),

    #[error("empty lexicon: {0}")]
    EmptyLexicon(String),

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("vocabulary mismatch: {0}")]
    VocabMismatch(String),

    #[error("non-finite loss at step {step}: {detail}")]
    NonFiniteLoss { step: usize, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad user input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse { .. }
                | Error::UnknownConstruction(_)
                | Error::DropoutRate(_)
                | Error::VocabMismatch(_)
                | Error::EmptyLexicon(_)
                | Error::EmptyCorpus
        )
    }
}
