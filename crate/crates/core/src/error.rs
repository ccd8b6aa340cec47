use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the corpus, classification, metrics and tuning modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid lexicon: {0}")]
    Lexicon(String),

    #[error("invalid document {id}: {message}")]
    Document { id: String, message: String },

    #[error("dataset split needs at least 10 labeled passages, got {0}")]
    SplitTooSmall(usize),

    #[error("passage {0} has no gold labels")]
    Unlabeled(String),

    #[error("vectorizer: {0}")]
    Vectorizer(String),

    #[error("svm: {0}")]
    Svm(String),

    #[error("score matrix: {0}")]
    ScoreMatrix(String),

    #[error("threshold {0} outside [0, 1]")]
    Threshold(f64),

    #[error("decision-valued score matrices cannot be thresholded; use svm_predict labels instead")]
    DecisionScores,

    #[error("prediction and gold passage ids differ (only predicted: {only_pred:?}; only gold: {only_gold:?})")]
    IdMismatch {
        only_pred: Vec<String>,
        only_gold: Vec<String>,
    },

    #[error("class id {0} is outside the label schema")]
    UnknownClass(usize),

    #[error("gold labels contain no positive pairs; weighted averages are undefined")]
    EmptyGold,

    #[error("config space: {0}")]
    ConfigSpace(String),

    #[error("config: {0}")]
    Config(String),

    #[error("surrogate: {0}")]
    Surrogate(String),

    #[error("acquisition: {0}")]
    Acquisition(String),

    #[error("tuning: {0}")]
    Tuning(String),

    #[error("artifact {path}: {message}")]
    Artifact { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
