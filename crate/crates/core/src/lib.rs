//! Classification of sustainability claims in apparel-sector texts: corpus
//! preprocessing, keyword / TF-IDF + SVM / score-threshold classifiers,
//! multi-label metrics and Bayesian hyperparameter tuning.

pub mod classify;
pub mod corpus;
pub mod demo;
pub mod hpo;
pub mod io;
pub mod metrics;
pub mod schema;
pub mod text;

mod error;

pub use error::{Error, Result};
