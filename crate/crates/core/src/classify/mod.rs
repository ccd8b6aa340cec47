//! Multi-label classifiers: keyword baseline, TF-IDF + one-vs-rest linear
//! SVM, and sigmoid thresholding of imported score matrices.

mod keyword;
mod scores;
mod sparse;
mod svm;
mod tfidf;

use std::path::Path;

pub use keyword::{keyword_classify, KeywordClassifier};
pub use scores::{
    export_scores, import_scores, import_scores_with, sigmoid, threshold_predict, PredictionSet,
    ScoreKind, ScoreMatrix,
};
pub use sparse::SparseVector;
pub use svm::{
    train_binary, train_ovr_svm, LinearSvm, OvrSvmEnsemble, SvmParams, SvmPrediction, C_MAX, C_MIN,
};
pub use tfidf::{fit_tfidf, TfidfModel, MAX_NGRAM};

use crate::error::Result;
use crate::schema::LabelSet;

/// A fitted vectorizer together with the SVMs trained on its output.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmPipeline {
    pub tfidf: TfidfModel,
    pub svm: OvrSvmEnsemble,
}

impl SvmPipeline {
    pub fn predict(&self, text: &str) -> SvmPrediction {
        self.svm.predict(&self.tfidf.transform(text))
    }

    pub fn classify(&self, text: &str) -> LabelSet {
        self.predict(text).labels
    }

    /// Writes `tfidf.tsv` and `svm.csv` into `dir`, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| crate::Error::io(dir, e))?;
        self.tfidf.save(dir)?;
        self.svm.save(dir)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        Ok(SvmPipeline {
            tfidf: TfidfModel::load(dir)?,
            svm: OvrSvmEnsemble::load(dir)?,
        })
    }
}
