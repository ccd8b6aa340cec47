use std::convert::Infallible;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sustext_core::classify::{fit_tfidf, train_ovr_svm, KeywordClassifier, SvmParams, SvmPipeline};
use sustext_core::corpus::{
    build_passages, load_documents, load_passages, split_dataset, DocumentFormat,
};
use sustext_core::demo::{generate, DemoConfig, PassageKind};
use sustext_core::hpo::{
    optimize, suggest, tune_svm_baseline, Config, ConfigSpace, LabeledSplits, ParamKind,
    ParamSpec, TuneOptions,
};
use sustext_core::schema::{KeywordLexicon, LabelSchema, NUM_CLASSES};

fn demo_splits() -> LabeledSplits {
    let demo = generate(&DemoConfig::default());
    let split = split_dataset(&demo.passages, 42).unwrap();
    LabeledSplits::from_split(&demo.passages, &split).unwrap()
}

#[test]
fn demo_files_round_trip_through_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let demo = generate(&DemoConfig::default());
    demo.write(dir.path()).unwrap();
    let docs = load_documents(dir.path().join("documents.jsonl"), DocumentFormat::Jsonl).unwrap();
    let (kept, report) = build_passages(&docs, &KeywordLexicon::builtin());
    assert_eq!(kept.len(), 200);
    assert_eq!(report.non_english_documents.len(), 1);
    let labeled = load_passages(dir.path().join("passages.jsonl"), &LabelSchema::builtin()).unwrap();
    let ids: Vec<_> = kept.iter().map(|p| &p.id).collect();
    let labeled_ids: Vec<_> = labeled.iter().map(|p| &p.id).collect();
    assert_eq!(ids, labeled_ids);
}

#[test]
fn keyword_baseline_misses_context_passages() {
    let demo = generate(&DemoConfig::default());
    let kw = KeywordClassifier::new(&KeywordLexicon::builtin());
    let context: Vec<_> = demo.manifest.ids_of(PassageKind::Context).collect();
    assert!(!context.is_empty());
    for p in demo.passages.iter().filter(|p| context.contains(&p.id.as_str())) {
        assert!(kw.classify(&p.text).is_empty());
    }
}

#[test]
fn svm_pipeline_artifacts_round_trip() {
    let splits = demo_splits();
    let texts: Vec<&str> = splits.train.iter().map(|p| p.text.as_str()).collect();
    let tfidf = fit_tfidf(&texts, 2).unwrap();
    let xs = tfidf.transform_all(&texts);
    let ys: Vec<_> = splits.train.iter().map(|p| p.gold_labels.clone().unwrap()).collect();
    let svm = train_ovr_svm(&xs, &ys, NUM_CLASSES, tfidf.vocabulary_size(), &SvmParams::new(2.5)).unwrap();
    let model = SvmPipeline { tfidf, svm };
    let dir = tempfile::tempdir().unwrap();
    model.save(dir.path().join("model")).unwrap();
    let back = SvmPipeline::load(dir.path().join("model")).unwrap();
    for p in &splits.test {
        assert_eq!(back.classify(&p.text), model.classify(&p.text));
        let (a, b) = (back.predict(&p.text).scores, model.predict(&p.text).scores);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}

#[test]
fn tuning_reports_one_record_per_seed() {
    let splits = demo_splits();
    let r = tune_svm_baseline(&splits, 1, &[1, 2, 3, 4, 5], &TuneOptions::default()).unwrap();
    assert_eq!(r.seeds.len(), 5);
    assert!(r.seeds.iter().all(|s| s.history.len() == 1));

    let empty_val = LabeledSplits {
        val: Vec::new(),
        ..splits
    };
    assert!(tune_svm_baseline(&empty_val, 3, &[1], &TuneOptions::default()).is_err());
}

#[test]
fn tuned_validation_score_at_least_default() {
    let splits = demo_splits();
    let r = tune_svm_baseline(&splits, 30, &[1, 2, 3, 4, 5], &TuneOptions::default()).unwrap();
    for s in &r.seeds {
        assert!(
            s.best_val_weighted_f1 >= r.default.val_weighted_f1,
            "seed {}: {} < {}",
            s.seed,
            s.best_val_weighted_f1,
            r.default.val_weighted_f1
        );
    }
}

#[test]
fn trial_logs_are_written_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let opts = TuneOptions {
        trial_log_dir: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    tune_svm_baseline(&demo_splits(), 4, &[7, 8], &opts).unwrap();
    for seed in [7, 8] {
        let body = std::fs::read_to_string(dir.path().join(format!("trials-seed{seed}.jsonl"))).unwrap();
        assert_eq!(body.lines().count(), 4);
    }
}

// Regression check recorded from runs of the optimizer on a 1-D quadratic.
#[test]
fn suggestion_after_thirty_trials_is_near_the_optimum() {
    let space = ConfigSpace::new(vec![ParamSpec {
        name: "x".into(),
        kind: ParamKind::LinearFloat { lower: 0.0, upper: 1.0 },
    }])
    .unwrap();
    let f = |c: &Config| Ok::<_, Infallible>(-(c["x"].as_f64().unwrap() - 0.7).powi(2));
    let near = (1..=5u64)
        .filter(|&seed| {
            let (_, history) = optimize(f, &space, 30, seed).unwrap();
            let next = suggest(&space, &history, &mut ChaCha8Rng::seed_from_u64(seed));
            (0.5..=0.9).contains(&next["x"].as_f64().unwrap())
        })
        .count();
    assert!(near >= 4, "{near}/5");
}
