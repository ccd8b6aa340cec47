use std::collections::BTreeSet;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sustext_core::classify::{export_scores, ScoreKind, ScoreMatrix};
use sustext_core::corpus::{DatasetSplit, Passage};
use sustext_core::demo::DemoManifest;
use sustext_core::io::read_jsonl;

fn sustext(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sustext"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .expect("run sustext")
}

fn ok(args: &[&str]) -> Output {
    let out = sustext(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read_json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn demo(dir: &Path) -> std::path::PathBuf {
    let out = dir.join("demo");
    ok(&["gen-demo", "--seed", "7", "--out", p(&out)]);
    out
}

fn assert_one_line_error(out: &Output) {
    assert!(!out.status.success());
    let err = stderr(out);
    let lines: Vec<&str> = err.lines().filter(|l| l.starts_with("error:")).collect();
    assert_eq!(lines.len(), 1, "{err}");
}

#[test]
fn gen_demo_is_byte_identical_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["gen-demo", "--seed", "7", "--out", p(&a)]);
    ok(&["gen-demo", "--seed", "7", "--out", p(&b)]);
    ok(&["gen-demo", "--seed", "8", "--out", p(&c)]);
    for f in ["documents.jsonl", "passages.jsonl", "manifest.json", "split.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(
        std::fs::read(a.join("passages.jsonl")).unwrap(),
        std::fs::read(c.join("passages.jsonl")).unwrap()
    );
}

#[test]
fn ingest_of_demo_documents_matches_the_construction() {
    let dir = tempfile::tempdir().unwrap();
    let d = demo(dir.path());
    let out = dir.path().join("ingested");
    ok(&[
        "ingest",
        "--docs",
        p(&d.join("documents.jsonl")),
        "--out",
        p(&out),
        "--labels",
        p(&d.join("passages.jsonl")),
    ]);
    let manifest: DemoManifest = serde_json::from_value(read_json(d.join("manifest.json"))).unwrap();
    let report = read_json(out.join("ingest_report.json"));
    assert_eq!(report["documents"], manifest.documents);
    assert_eq!(report["passages_kept"], manifest.passages);
    assert_eq!(report["passages_dropped"], manifest.irrelevant_blocks);
    assert_eq!(report["non_english_documents"], serde_json::json!(manifest.non_english_documents));

    let generated: Vec<Passage> = read_jsonl(d.join("passages.jsonl")).unwrap();
    let ingested: Vec<Passage> = read_jsonl(out.join("passages.jsonl")).unwrap();
    assert_eq!(ingested, generated);
    // Same ids and seed, so the same split as gen-demo's.
    assert_eq!(
        std::fs::read(out.join("split.json")).unwrap(),
        std::fs::read(d.join("split.json")).unwrap()
    );
}

#[test]
fn ingest_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let out = dir.path().join("e");
    let run = ok(&["ingest", "--docs", p(&empty), "--out", p(&out)]);
    assert!(stderr(&run).contains("WARN"), "{}", stderr(&run));
    assert_eq!(std::fs::read_to_string(out.join("passages.jsonl")).unwrap(), "");
    assert!(!out.join("split.json").exists());

    let lexicon = dir.path().join("lexicon.json");
    std::fs::write(&lexicon, r#"{"brands": ["Zara"], "issues": {"0": ["wages"], "99": ["moon dust"]}}"#).unwrap();
    let run = sustext(&["ingest", "--docs", p(&empty), "--lexicon", p(&lexicon), "--out", p(&dir.path().join("x"))]);
    assert_one_line_error(&run);
    assert!(stderr(&run).contains("99"), "{}", stderr(&run));
}

/// Recounts micro and weighted F1 from the gold labels and predictions.
fn recount(gold: &[BTreeSet<usize>], pred: &[BTreeSet<usize>]) -> (f64, f64) {
    let mut per = [(0u64, 0u64, 0u64); 19];
    for (g, p) in gold.iter().zip(pred) {
        for c in 0..19 {
            match (g.contains(&c), p.contains(&c)) {
                (true, true) => per[c].0 += 1,
                (false, true) => per[c].1 += 1,
                (true, false) => per[c].2 += 1,
                _ => {}
            }
        }
    }
    let f1 = |(tp, fp, fn_): (u64, u64, u64)| {
        let pr = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
        let re = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
        if pr + re == 0.0 {
            0.0
        } else {
            2.0 * pr * re / (pr + re)
        }
    };
    let pooled = per.iter().fold((0, 0, 0), |a, c| (a.0 + c.0, a.1 + c.1, a.2 + c.2));
    let support: u64 = per.iter().map(|c| c.0 + c.2).sum();
    let weighted = per.iter().map(|&c| (c.0 + c.2) as f64 * f1(c)).sum::<f64>() / support as f64;
    (f1(pooled), weighted)
}

#[test]
fn evaluate_keyword_and_score_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let d = demo(dir.path());
    let run = ok(&["evaluate", "--corpus", p(&d), "--pred", "keyword"]);
    assert!(String::from_utf8_lossy(&run.stdout).contains("weighted:"));
    let report = read_json(d.join("eval-keyword.json"));

    let split: DatasetSplit = serde_json::from_value(read_json(d.join("split.json"))).unwrap();
    let passages: Vec<Passage> = read_jsonl(d.join("passages.jsonl")).unwrap();
    let test: Vec<&Passage> = split
        .test_ids
        .iter()
        .map(|id| passages.iter().find(|p| &p.id == id).unwrap())
        .collect();
    let gold: Vec<BTreeSet<usize>> = test.iter().map(|p| p.gold_labels.clone().unwrap()).collect();
    // The keyword baseline predicts exactly the classes whose issue keywords matched.
    let pred: Vec<BTreeSet<usize>> = test.iter().map(|p| p.matched_issue_keywords.keys().copied().collect()).collect();
    let (micro, weighted) = recount(&gold, &pred);
    assert_eq!(report["micro"]["f1"].as_f64().unwrap(), micro);
    assert!((report["weighted"]["f1"].as_f64().unwrap() - weighted).abs() < 1e-12);
    assert!(micro < 1.0, "context passages should be missed");

    // Logits +3 on gold classes and -3 elsewhere: perfect at 0.33.
    let scores = ScoreMatrix {
        kind: ScoreKind::Logit,
        passage_ids: passages.iter().map(|p| p.id.clone()).collect(),
        rows: passages
            .iter()
            .map(|p| {
                let g = p.gold_labels.as_ref().unwrap();
                (0..19).map(|c| if g.contains(&c) { 3.0 } else { -3.0 }).collect()
            })
            .collect(),
    };
    let csv = dir.path().join("scores.csv");
    export_scores(&scores, &csv).unwrap();
    let out = dir.path().join("sm.json");
    ok(&[
        "evaluate", "--corpus", p(&d), "--pred", "score-matrix", "--scores", p(&csv), "--threshold", "0.33", "--out", p(&out),
    ]);
    let r = read_json(&out);
    for agg in ["micro", "weighted"] {
        assert_eq!(r[agg]["f1"], 1.0, "{agg}");
    }

    let missing = sustext(&["evaluate", "--corpus", p(&d), "--pred", "svm-model"]);
    assert_one_line_error(&missing);
}

#[test]
fn evaluate_without_split_fails() {
    let dir = tempfile::tempdir().unwrap();
    let d = demo(dir.path());
    std::fs::remove_file(d.join("split.json")).unwrap();
    let run = sustext(&["evaluate", "--corpus", p(&d), "--pred", "keyword"]);
    assert_one_line_error(&run);
    assert!(stderr(&run).contains("missing split"));
}

#[test]
fn tune_is_reproducible_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let d = demo(dir.path());
    let (a, b) = (dir.path().join("ta"), dir.path().join("tb"));
    for out in [&a, &b] {
        let run = ok(&["tune", "--corpus", p(&d), "--trials", "12", "--seeds", "1,2", "--out", p(out)]);
        assert!(String::from_utf8_lossy(&run.stdout).contains("±"));
    }
    // Rerunning into the same directory restarts the logs instead of appending.
    ok(&["tune", "--corpus", p(&d), "--trials", "12", "--seeds", "1,2", "--out", p(&a)]);
    for seed in [1, 2] {
        let log = format!("trials-seed{seed}.jsonl");
        let body = std::fs::read_to_string(a.join(&log)).unwrap();
        assert_eq!(body.lines().count(), 12);
        assert_eq!(body, std::fs::read_to_string(b.join(&log)).unwrap());
        assert!(a.join("models").join(format!("seed{seed}")).join("svm.csv").exists());
    }
    assert_eq!(std::fs::read(a.join("report.json")).unwrap(), std::fs::read(b.join("report.json")).unwrap());
    let report = read_json(a.join("report.json"));
    assert_eq!(report["seeds"].as_array().unwrap().len(), 2);

    let model = a.join("models").join("seed1");
    let out = dir.path().join("svm.json");
    ok(&["evaluate", "--corpus", p(&d), "--pred", "svm-model", "--model", p(&model), "--out", p(&out)]);
    assert_eq!(read_json(&out), report["seeds"][0]["test"]);
}

#[test]
fn tune_rejects_unlabeled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = demo(dir.path());
    let out = dir.path().join("raw");
    ok(&["ingest", "--docs", p(&d.join("documents.jsonl")), "--out", p(&out)]);
    let run = sustext(&["tune", "--corpus", p(&out), "--trials", "2"]);
    assert_one_line_error(&run);
    assert!(stderr(&run).contains("no labeled passages"), "{}", stderr(&run));
}

#[test]
fn serve_refuses_invalid_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let d = demo(dir.path());
    let passages = std::fs::read_to_string(d.join("passages.jsonl")).unwrap();
    let first = passages.lines().next().unwrap();
    let bad = first.replacen("\"gold_labels\":[", "\"gold_labels\":[42,", 1);
    assert_ne!(first, bad);
    std::fs::write(d.join("passages.jsonl"), format!("{bad}\n")).unwrap();
    let storage = dir.path().join("s");
    let run = sustext(&["serve", "--corpus", p(&d), "--storage", p(&storage), "--bind", "127.0.0.1:0"]);
    assert_one_line_error(&run);
    assert!(stderr(&run).contains("fails validation"), "{}", stderr(&run));
}
