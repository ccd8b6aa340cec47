use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use sustext_core::classify::{import_scores, threshold_predict, KeywordClassifier, PredictionSet, SvmPipeline};
use sustext_core::corpus::{
    build_passages, gold_map, load_documents, load_passages, split_dataset, DatasetSplit, DocumentFormat, Passage,
};
use sustext_core::demo::{generate, DemoConfig};
use sustext_core::hpo::{tune_svm_baseline, LabeledSplits, TuneOptions, TuneReport};
use sustext_core::io::write_jsonl;
use sustext_core::metrics::{evaluate, MetricsReport};
use sustext_core::schema::{KeywordLexicon, LabelSchema};
use sustext_service::{ClassifierMode, ServiceConfig};

const PASSAGES: &str = "passages.jsonl";
const DOCUMENTS: &str = "documents.jsonl";
const SPLIT: &str = "split.json";
const DEFAULT_SPLIT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "sustext", version, about = "Sustainability-claims passage classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a keyword-filtered passage corpus from documents.
    Ingest(IngestArgs),
    /// Tune the TF-IDF + SVM baseline with Bayesian optimization.
    Tune(TuneArgs),
    /// Score predictions against the test split.
    Evaluate(EvaluateArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Write a seeded synthetic labeled corpus.
    GenDemo(GenDemoArgs),
}

#[derive(clap::Args)]
struct IngestArgs {
    /// JSON Lines documents, a .txt file, or a directory of .txt files.
    #[arg(long)]
    docs: PathBuf,
    /// Keyword lexicon JSON; the bundled lexicon when omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Label schema JSON; the bundled schema when omitted.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Passages file whose gold labels are copied onto passages with the same id.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Seed of the train/val/test split written when the corpus is labeled.
    #[arg(long, default_value_t = DEFAULT_SPLIT_SEED)]
    split_seed: u64,
}

#[derive(clap::Args)]
struct TuneArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    seeds: Vec<u64>,
    /// Output directory; `<corpus>/tune` by default.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Evaluate the default configuration as every seed's first trial.
    #[arg(long)]
    warm_start: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PredSource {
    Keyword,
    SvmModel,
    ScoreMatrix,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum)]
    pred: PredSource,
    /// Model directory (svm-model).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Score-matrix CSV (score-matrix).
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value_t = sustext_service::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Report path; `<corpus>/eval-<pred>.json` by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ServeArgs {
    /// TOML service configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    storage: Option<PathBuf>,
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
    #[arg(long)]
    model: Option<PathBuf>,
    /// Score matrix classifying the backend corpus instead of the model.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(clap::Args)]
struct GenDemoArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Tune(a) => tune(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Serve(a) => serve(a),
        Command::GenDemo(a) => gen_demo(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One line: the whole cause chain joined.
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_schema(path: Option<&Path>) -> Result<LabelSchema> {
    match path {
        Some(p) => LabelSchema::load(p).with_context(|| format!("schema {}", p.display())),
        None => Ok(LabelSchema::builtin()),
    }
}

fn load_lexicon(path: Option<&Path>, schema: &LabelSchema) -> Result<KeywordLexicon> {
    match path {
        Some(p) => KeywordLexicon::load(p, schema).with_context(|| format!("lexicon {}", p.display())),
        None => Ok(KeywordLexicon::builtin()),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(path, body).with_context(|| format!("cannot write {}", path.display()))
}

fn write_split(dir: &Path, passages: &[Passage], seed: u64) -> Result<Option<DatasetSplit>> {
    let labeled: Vec<Passage> = passages.iter().filter(|p| p.gold_labels.is_some()).cloned().collect();
    if labeled.is_empty() {
        return Ok(None);
    }
    let split = split_dataset(&labeled, seed)?;
    write_json(&dir.join(SPLIT), &split)?;
    Ok(Some(split))
}

fn read_split(corpus: &Path) -> Result<DatasetSplit> {
    let path = corpus.join(SPLIT);
    let body = std::fs::read_to_string(&path)
        .with_context(|| format!("missing split: cannot read {}", path.display()))?;
    serde_json::from_str(&body).with_context(|| format!("malformed split {}", path.display()))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let schema = load_schema(a.schema.as_deref())?;
    let lexicon = load_lexicon(a.lexicon.as_deref(), &schema)?;
    let format = match a.docs.extension().and_then(|e| e.to_str()) {
        Some("jsonl") => DocumentFormat::Jsonl,
        _ => DocumentFormat::Txt,
    };
    let documents = load_documents(&a.docs, format)?;
    if documents.is_empty() {
        log::warn!("{}: no documents; writing an empty corpus", a.docs.display());
    }
    let (mut passages, report) = build_passages(&documents, &lexicon);
    if let Some(path) = &a.labels {
        let gold = gold_map(&load_passages(path, &schema)?);
        let mut matched = 0;
        for p in &mut passages {
            if let Some(g) = gold.get(&p.id) {
                p.gold_labels = Some(g.clone());
                matched += 1;
            }
        }
        log::info!("gold labels attached to {matched} of {} passages", passages.len());
    }

    std::fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    write_jsonl(a.out.join(PASSAGES), &passages)?;
    write_jsonl(a.out.join(DOCUMENTS), &documents)?;
    write_json(&a.out.join("ingest_report.json"), &report)?;
    if write_split(&a.out, &passages, a.split_seed)?.is_some() {
        log::info!("wrote {SPLIT} (seed {})", a.split_seed);
    }
    log::info!(
        "{} documents ({} non-English), {} passages kept, {} dropped",
        report.documents,
        report.non_english_documents.len(),
        report.passages_kept,
        report.passages_dropped
    );
    Ok(())
}

fn gen_demo(a: GenDemoArgs) -> Result<()> {
    let demo = generate(&DemoConfig {
        seed: a.seed,
        ..DemoConfig::default()
    });
    demo.write(&a.out)?;
    write_split(&a.out, &demo.passages, DEFAULT_SPLIT_SEED)?;
    log::info!(
        "demo corpus (seed {}): {} documents, {} passages in {}",
        a.seed,
        demo.documents.len(),
        demo.passages.len(),
        a.out.display()
    );
    Ok(())
}

fn labeled_splits(corpus: &Path, schema: &LabelSchema, create_split: bool) -> Result<LabeledSplits> {
    let passages = load_passages(corpus.join(PASSAGES), schema)?;
    let split = if corpus.join(SPLIT).exists() || !create_split {
        read_split(corpus)?
    } else {
        write_split(corpus, &passages, DEFAULT_SPLIT_SEED)?
            .with_context(|| format!("{}: no labeled passages", corpus.display()))?
    };
    Ok(LabeledSplits::from_split(&passages, &split)?)
}

fn summary_table(report: &TuneReport) -> String {
    let f = |m: sustext_core::hpo::MeanStd| format!("{:.4} ± {:.4}", m.mean, m.std);
    let mut out = String::new();
    let _ = writeln!(out, "| model | weighted F1 | micro F1 | macro F1 |");
    let _ = writeln!(out, "|---|---|---|---|");
    let d = &report.default.test;
    let _ = writeln!(
        out,
        "| default (max_ngram=1, C=1) | {:.4} | {:.4} | {:.4} |",
        d.weighted.f1, d.micro.f1, d.macro_.f1
    );
    let _ = writeln!(
        out,
        "| tuned ({} seeds, {} trials) | {} | {} | {} |",
        report.seeds.len(),
        report.n_trials,
        f(report.test_weighted_f1),
        f(report.test_micro_f1),
        f(report.test_macro_f1)
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "| seed | max_ngram | C | val weighted F1 | test weighted F1 |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    for s in &report.seeds {
        let _ = writeln!(
            out,
            "| {} | {} | {:.4} | {:.4} | {:.4} |",
            s.seed, s.best.max_ngram, s.best.c, s.best_val_weighted_f1, s.test.weighted.f1
        );
    }
    out
}

fn tune(a: TuneArgs) -> Result<()> {
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let schema = load_schema(a.schema.as_deref())?;
    let splits = labeled_splits(&a.corpus, &schema, true)?;
    let out = a.out.unwrap_or_else(|| a.corpus.join("tune"));
    std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    // Trial logs are append-only; start each invocation from scratch.
    for seed in &a.seeds {
        let log = out.join(format!("trials-seed{seed}.jsonl"));
        if log.exists() {
            std::fs::remove_file(&log).with_context(|| format!("cannot remove {}", log.display()))?;
        }
    }
    let options = TuneOptions {
        n_classes: schema.len(),
        warm_start_default: a.warm_start,
        trial_log_dir: Some(out.clone()),
        ..TuneOptions::default()
    };
    let report = tune_svm_baseline(&splits, a.trials, &a.seeds, &options)?;
    for s in &report.seeds {
        s.model.save(out.join("models").join(format!("seed{}", s.seed)))?;
    }
    write_json(&out.join("report.json"), &report)?;
    let table = summary_table(&report);
    std::fs::write(out.join("summary.md"), &table)?;
    print!("{table}");
    log::info!(
        "tuned test weighted F1 >= default in {}/{} seeds",
        report.seeds_at_least_default(),
        report.seeds.len()
    );
    Ok(())
}

fn predictions(a: &EvaluateArgs, schema: &LabelSchema, test: &[Passage]) -> Result<PredictionSet> {
    Ok(match a.pred {
        PredSource::Keyword => {
            let k = KeywordClassifier::new(&load_lexicon(a.lexicon.as_deref(), schema)?);
            test.iter().map(|p| (p.id.clone(), k.classify(&p.text))).collect()
        }
        PredSource::SvmModel => {
            let dir = a.model.as_ref().context("--pred svm-model needs --model <dir>")?;
            let model = SvmPipeline::load(dir)?;
            if model.svm.n_classes() != schema.len() {
                bail!("model has {} classes, schema has {}", model.svm.n_classes(), schema.len());
            }
            test.iter().map(|p| (p.id.clone(), model.classify(&p.text))).collect()
        }
        PredSource::ScoreMatrix => {
            let path = a.scores.as_ref().context("--pred score-matrix needs --scores <csv>")?;
            let all = threshold_predict(&import_scores(path)?, a.threshold)?;
            test.iter()
                .map(|p| {
                    all.get(&p.id)
                        .map(|l| (p.id.clone(), l.clone()))
                        .with_context(|| format!("{}: no row for test passage {}", path.display(), p.id))
                })
                .collect::<Result<_>>()?
        }
    })
}

fn run_evaluate(a: EvaluateArgs) -> Result<()> {
    let schema = load_schema(a.schema.as_deref())?;
    let splits = labeled_splits(&a.corpus, &schema, false)?;
    if splits.test.is_empty() {
        bail!("test split is empty");
    }
    let pred = predictions(&a, &schema, &splits.test)?;
    let report: MetricsReport = evaluate(&pred, &gold_map(&splits.test), schema.len())?;
    let name = match a.pred {
        PredSource::Keyword => "keyword",
        PredSource::SvmModel => "svm-model",
        PredSource::ScoreMatrix => "score-matrix",
    };
    let out = a.out.clone().unwrap_or_else(|| a.corpus.join(format!("eval-{name}.json")));
    write_json(&out, &report)?;
    for (agg, s) in [("micro", report.micro), ("macro", report.macro_), ("weighted", report.weighted)] {
        println!("{agg}: precision={:.4} recall={:.4} f1={:.4}", s.precision, s.recall, s.f1);
    }
    log::info!("{} test passages; report written to {}", splits.test.len(), out.display());
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => ServiceConfig::load(p)?,
        None => {
            let storage = a.storage.clone().context("--storage is required without --config")?;
            ServiceConfig::new(storage)
        }
    };
    if let Some(s) = a.storage {
        config.storage_root = s;
    }
    if let Some(b) = a.bind {
        config.bind = b;
    }
    if let Some(c) = a.corpus {
        config.backend.corpus_dir = Some(c);
    }
    if let Some(m) = a.model {
        config.classifier.model_dir = Some(m);
    }
    if let Some(s) = a.scores {
        config.backend.score_matrix = Some(s);
    }
    if a.threshold.is_some() {
        config.backend.threshold = a.threshold;
    }
    if config.classifier.mode.is_some_and(|m| m != ClassifierMode::Keyword) && config.classifier.model_dir.is_none() {
        bail!("classifier mode needs a model directory");
    }
    if let Some(dir) = &config.backend.corpus_dir {
        check_corpus(dir, config.schema.as_deref())?;
    }
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(sustext_service::serve(config))?;
    Ok(())
}

/// Schema validation of a backend corpus before the service starts.
fn check_corpus(dir: &Path, schema: Option<&Path>) -> Result<()> {
    let schema = load_schema(schema)?;
    let passages = load_passages(dir.join(PASSAGES), &schema)
        .with_context(|| format!("corpus {} fails validation", dir.display()))?;
    let docs = dir.join(DOCUMENTS);
    if docs.exists() {
        let documents = load_documents(&docs, DocumentFormat::Jsonl)
            .with_context(|| format!("corpus {} fails validation", dir.display()))?;
        let ids: BTreeMap<&str, ()> = documents.iter().map(|d| (d.id.as_str(), ())).collect();
        if let Some(p) = passages.iter().find(|p| !ids.contains_key(p.document_id.as_str())) {
            bail!("corpus {} fails validation: passage {} references unknown document {}", dir.display(), p.id, p.document_id);
        }
    }
    Ok(())
}
