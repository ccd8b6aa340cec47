//! Bayesian optimization over mixed configuration spaces (random-forest
//! surrogate, log expected improvement) and the SVM tuning protocol.

mod acquisition;
mod forest;
mod optimizer;
mod space;
mod tune;

pub use acquisition::{log_ei, LOG_EI_FLOOR};
pub use forest::{ForestConfig, ForestSurrogate};
pub use optimizer::{
    best_trial, fit_surrogate, optimize, random_search, read_trial_log, suggest, suggest_with,
    surrogate_predict, BoSettings, Optimizer, Trial, TrialLog,
};
pub use space::{encode_config, sample_config, Config, ConfigSpace, ParamKind, ParamSpec, ParamValue};
pub use tune::{
    tune_svm_baseline, DefaultResult, LabeledSplits, MeanStd, SeedResult, SvmHyperparams,
    TuneOptions, TuneReport, DEFAULT_C, DEFAULT_MAX_NGRAM,
};
