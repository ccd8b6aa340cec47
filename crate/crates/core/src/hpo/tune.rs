//! Tuning protocol for the TF-IDF + linear SVM baseline: per seed, optimize
//! validation weighted F1 over `{max_ngram, C}`, retrain the winner on the
//! training split and score it on the test split.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use super::optimizer::{BoSettings, Optimizer, Trial};
use super::space::{Config, ConfigSpace, ParamValue};
use crate::classify::{
    fit_tfidf, train_ovr_svm, PredictionSet, SparseVector, SvmParams, SvmPipeline, TfidfModel,
    MAX_NGRAM,
};
use crate::corpus::{gold_map, DatasetSplit, Passage};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, mean_std, MetricsReport};
use crate::schema::{LabelMap, LabelSet, NUM_CLASSES};

/// Labeled passages of each split.
#[derive(Debug, Clone)]
pub struct LabeledSplits {
    pub train: Vec<Passage>,
    pub val: Vec<Passage>,
    pub test: Vec<Passage>,
}

impl LabeledSplits {
    /// Resolves the ids of `split` against `passages`.
    pub fn from_split(passages: &[Passage], split: &DatasetSplit) -> Result<Self> {
        let by_id: BTreeMap<&str, &Passage> = passages.iter().map(|p| (p.id.as_str(), p)).collect();
        let pick = |ids: &[String]| -> Result<Vec<Passage>> {
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|p| (*p).clone())
                        .ok_or_else(|| Error::Tuning(format!("split references unknown passage {id}")))
                })
                .collect()
        };
        Ok(LabeledSplits {
            train: pick(&split.train_ids)?,
            val: pick(&split.val_ids)?,
            test: pick(&split.test_ids)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub n_classes: usize,
    pub bo: BoSettings,
    /// Evaluate the default configuration as the first trial of every seed.
    pub warm_start_default: bool,
    /// One `trials-seed<N>.jsonl` per seed is appended here when set.
    pub trial_log_dir: Option<PathBuf>,
}

impl Default for TuneOptions {
    fn default() -> Self {
        TuneOptions {
            n_classes: NUM_CLASSES,
            bo: BoSettings::default(),
            warm_start_default: false,
            trial_log_dir: None,
        }
    }
}

/// The untuned reference configuration.
pub const DEFAULT_MAX_NGRAM: usize = 1;
pub const DEFAULT_C: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SvmHyperparams {
    pub max_ngram: usize,
    #[serde(rename = "C")]
    pub c: f64,
}

impl SvmHyperparams {
    pub fn default_config() -> Self {
        SvmHyperparams {
            max_ngram: DEFAULT_MAX_NGRAM,
            c: DEFAULT_C,
        }
    }

    pub fn from_config(config: &Config) -> Result<Self> {
        let bad = || Error::Config(format!("not an SVM baseline configuration: {config:?}"));
        let max_ngram = config.get("max_ngram").and_then(ParamValue::as_i64).ok_or_else(bad)?;
        let c = config.get("C").and_then(ParamValue::as_f64).ok_or_else(bad)?;
        if !(1..=MAX_NGRAM as i64).contains(&max_ngram) {
            return Err(bad());
        }
        Ok(SvmHyperparams {
            max_ngram: max_ngram as usize,
            c,
        })
    }

    pub fn to_config(self) -> Config {
        Config::from([
            ("max_ngram".to_string(), ParamValue::Int(self.max_ngram as i64)),
            ("C".to_string(), ParamValue::Float(self.c)),
        ])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    pub best: SvmHyperparams,
    pub best_val_weighted_f1: f64,
    pub test: MetricsReport,
    pub history: Vec<Trial>,
    #[serde(skip)]
    pub model: SvmPipeline,
}

#[derive(Debug, Clone, Serialize)]
pub struct DefaultResult {
    pub config: SvmHyperparams,
    pub val_weighted_f1: f64,
    pub test: MetricsReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneReport {
    pub n_trials: usize,
    pub seeds: Vec<SeedResult>,
    pub default: DefaultResult,
    /// Across seeds, test split.
    pub test_weighted_f1: MeanStd,
    pub test_micro_f1: MeanStd,
    pub test_macro_f1: MeanStd,
}

impl TuneReport {
    /// Seeds whose tuned test weighted F1 is at least the default's.
    pub fn seeds_at_least_default(&self) -> usize {
        self.seeds
            .iter()
            .filter(|s| s.test.weighted.f1 >= self.default.test.weighted.f1)
            .count()
    }
}

/// Vectorizers (one per n-gram length) fitted on the training texts, with
/// the vectors of every split.
struct FeatureCache {
    by_ngram: Vec<Features>,
}

struct Features {
    tfidf: TfidfModel,
    train: Vec<SparseVector>,
    val: Vec<SparseVector>,
    test: Vec<SparseVector>,
}

impl FeatureCache {
    fn build(splits: &LabeledSplits) -> Result<Self> {
        let texts = |ps: &[Passage]| ps.iter().map(|p| p.text.clone()).collect::<Vec<_>>();
        let train_texts = texts(&splits.train);
        let val_texts = texts(&splits.val);
        let test_texts = texts(&splits.test);
        let by_ngram = (1..=MAX_NGRAM)
            .map(|n| {
                let tfidf = fit_tfidf(&train_texts, n)?;
                Ok(Features {
                    train: tfidf.transform_all(&train_texts),
                    val: tfidf.transform_all(&val_texts),
                    test: tfidf.transform_all(&test_texts),
                    tfidf,
                })
            })
            .collect::<Result<_>>()?;
        Ok(FeatureCache { by_ngram })
    }

    fn get(&self, max_ngram: usize) -> &Features {
        &self.by_ngram[max_ngram - 1]
    }
}

fn labels(ps: &[Passage]) -> Result<Vec<LabelSet>> {
    ps.iter()
        .map(|p| p.gold_labels.clone().ok_or_else(|| Error::Unlabeled(p.id.clone())))
        .collect()
}

struct Evaluator<'a> {
    splits: &'a LabeledSplits,
    cache: FeatureCache,
    train_y: Vec<LabelSet>,
    val_gold: LabelMap,
    test_gold: LabelMap,
    n_classes: usize,
}

impl Evaluator<'_> {
    fn train(&self, hp: SvmHyperparams, seed: u64) -> Result<SvmPipeline> {
        let f = self.cache.get(hp.max_ngram);
        let svm = train_ovr_svm(
            &f.train,
            &self.train_y,
            self.n_classes,
            f.tfidf.vocabulary_size(),
            &SvmParams::new(hp.c).with_seed(seed),
        )?;
        Ok(SvmPipeline {
            tfidf: f.tfidf.clone(),
            svm,
        })
    }

    fn score(&self, model: &SvmPipeline, on_test: bool) -> Result<MetricsReport> {
        let f = self.cache.get(model.tfidf.max_ngram());
        let (ps, xs, gold) = if on_test {
            (&self.splits.test, &f.test, &self.test_gold)
        } else {
            (&self.splits.val, &f.val, &self.val_gold)
        };
        let pred: PredictionSet = ps
            .iter()
            .zip(xs)
            .map(|(p, x)| (p.id.clone(), model.svm.predict(x).labels))
            .collect();
        evaluate(&pred, gold, self.n_classes)
    }

    fn val_weighted_f1(&self, hp: SvmHyperparams, seed: u64) -> Result<f64> {
        let model = self.train(hp, seed)?;
        Ok(self.score(&model, false)?.weighted.f1)
    }
}

/// Runs the tuning protocol once per seed. Seeds run concurrently; each
/// optimization loop is itself sequential.
pub fn tune_svm_baseline(
    splits: &LabeledSplits,
    n_trials: usize,
    seeds: &[u64],
    options: &TuneOptions,
) -> Result<TuneReport> {
    if splits.val.is_empty() {
        return Err(Error::Tuning("validation split is empty".into()));
    }
    if splits.train.len() < 2 {
        return Err(Error::Tuning("training split needs at least two passages".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Tuning("no seeds given".into()));
    }
    let eval = Evaluator {
        splits,
        cache: FeatureCache::build(splits)?,
        train_y: labels(&splits.train)?,
        val_gold: gold_map(&splits.val),
        test_gold: gold_map(&splits.test),
        n_classes: options.n_classes,
    };
    if eval.val_gold.len() != splits.val.len() || eval.test_gold.len() != splits.test.len() {
        return Err(Error::Tuning("validation and test passages must all be labeled".into()));
    }
    if let Some(dir) = &options.trial_log_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let default_hp = SvmHyperparams::default_config();
    let default_model = eval.train(default_hp, 0)?;
    let default = DefaultResult {
        config: default_hp,
        val_weighted_f1: eval.score(&default_model, false)?.weighted.f1,
        test: eval.score(&default_model, true)?,
    };

    let space = ConfigSpace::svm_baseline();
    let run_seed = |seed: u64| -> Result<SeedResult> {
        let mut opt = Optimizer::new(&space, seed).settings(options.bo);
        if options.warm_start_default {
            opt = opt.enqueue(default_hp.to_config());
        }
        if let Some(dir) = &options.trial_log_dir {
            opt = opt.trial_log(dir.join(format!("trials-seed{seed}.jsonl")));
        }
        let (best, history) = opt.run(n_trials, |config: &Config| {
            eval.val_weighted_f1(SvmHyperparams::from_config(config)?, 0)
        })?;
        if best.failed() {
            return Err(Error::Tuning(format!("seed {seed}: every trial failed")));
        }
        let hp = SvmHyperparams::from_config(&best.config)?;
        let model = eval.train(hp, 0)?;
        log::info!(
            "seed {seed}: best max_ngram={} C={:.4} val weighted F1={:.4}",
            hp.max_ngram,
            hp.c,
            best.objective
        );
        Ok(SeedResult {
            seed,
            best: hp,
            best_val_weighted_f1: best.objective,
            test: eval.score(&model, true)?,
            history,
            model,
        })
    };
    let run_seed = &run_seed;
    let results: Vec<Result<SeedResult>> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds.iter().map(|&seed| s.spawn(move || run_seed(seed))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("tuning thread panicked"))
            .collect()
    });
    let seeds: Vec<SeedResult> = results.into_iter().collect::<Result<_>>()?;

    let summary = |f: fn(&MetricsReport) -> f64| {
        let v: Vec<f64> = seeds.iter().map(|s| f(&s.test)).collect();
        let (mean, std) = mean_std(&v);
        MeanStd { mean, std }
    };
    Ok(TuneReport {
        n_trials,
        test_weighted_f1: summary(|r| r.weighted.f1),
        test_micro_f1: summary(|r| r.micro.f1),
        test_macro_f1: summary(|r| r.macro_.f1),
        seeds,
        default,
    })
}
