//! Multi-label precision, recall and F1 with micro, macro and weighted averaging.
//!
//! Any ratio with a zero denominator is 0. Macro averages run over every
//! class in `0..n_classes`, including classes without gold support; weighted
//! averages use gold support as weights.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::PredictionSet;
use crate::error::{Error, Result};
use crate::schema::LabelMap;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Counts {
    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn scores(&self) -> Scores {
        Scores::from_counts(self.tp, self.fp, self.fn_)
    }
}

/// Per-class confusion counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub per_class: Vec<Counts>,
}

impl ClassCounts {
    pub fn pooled(&self) -> Counts {
        self.per_class.iter().fold(Counts::default(), |acc, c| Counts {
            tp: acc.tp + c.tp,
            fp: acc.fp + c.fp,
            fn_: acc.fn_ + c.fn_,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Scores {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Scores {
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub class_id: usize,
    pub support: u64,
    #[serde(flatten)]
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassScores>,
    pub micro: Scores,
    #[serde(rename = "macro")]
    pub macro_: Scores,
    pub weighted: Scores,
}

/// Counts true/false positives and false negatives per class.
pub fn class_counts(pred: &PredictionSet, gold: &LabelMap, n_classes: usize) -> Result<ClassCounts> {
    check_same_ids(pred, gold)?;
    let mut per_class = vec![Counts::default(); n_classes];
    for (id, gold_set) in gold {
        let pred_set = &pred.labels[id];
        if let Some(&c) = gold_set.iter().chain(pred_set).find(|&&c| c >= n_classes) {
            return Err(Error::UnknownClass(c));
        }
        for &c in pred_set {
            if gold_set.contains(&c) {
                per_class[c].tp += 1;
            } else {
                per_class[c].fp += 1;
            }
        }
        for &c in gold_set.difference(pred_set) {
            per_class[c].fn_ += 1;
        }
    }
    Ok(ClassCounts { per_class })
}

fn check_same_ids(pred: &PredictionSet, gold: &LabelMap) -> Result<()> {
    if pred.labels.len() == gold.len() && pred.labels.keys().eq(gold.keys()) {
        return Ok(());
    }
    let p: BTreeSet<&String> = pred.labels.keys().collect();
    let g: BTreeSet<&String> = gold.keys().collect();
    Err(Error::IdMismatch {
        only_pred: p.difference(&g).map(|s| s.to_string()).collect(),
        only_gold: g.difference(&p).map(|s| s.to_string()).collect(),
    })
}

/// Full report over classes `0..n_classes`.
pub fn evaluate(pred: &PredictionSet, gold: &LabelMap, n_classes: usize) -> Result<MetricsReport> {
    let counts = class_counts(pred, gold, n_classes)?;
    report_from_counts(&counts)
}

pub fn report_from_counts(counts: &ClassCounts) -> Result<MetricsReport> {
    let pooled = counts.pooled();
    let total_support = pooled.support();
    if total_support == 0 {
        return Err(Error::EmptyGold);
    }
    let per_class: Vec<ClassScores> = counts
        .per_class
        .iter()
        .enumerate()
        .map(|(class_id, c)| ClassScores {
            class_id,
            support: c.support(),
            scores: c.scores(),
        })
        .collect();

    let k = per_class.len() as f64;
    let mut macro_ = Scores::default();
    let mut weighted = Scores::default();
    for c in &per_class {
        macro_.precision += c.scores.precision;
        macro_.recall += c.scores.recall;
        macro_.f1 += c.scores.f1;
        let w = c.support as f64;
        weighted.precision += w * c.scores.precision;
        weighted.recall += w * c.scores.recall;
        weighted.f1 += w * c.scores.f1;
    }
    let total = total_support as f64;
    for (m, d) in [(&mut macro_, k), (&mut weighted, total)] {
        m.precision /= d;
        m.recall /= d;
        m.f1 /= d;
    }
    Ok(MetricsReport {
        per_class,
        micro: pooled.scores(),
        macro_,
        weighted,
    })
}

impl MetricsReport {
    pub fn aggregate(&self, name: &str) -> Option<Scores> {
        match name {
            "micro" => Some(self.micro),
            "macro" => Some(self.macro_),
            "weighted" => Some(self.weighted),
            _ => None,
        }
    }

    /// `key=value` lines: the nine aggregates, then per-class values.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (name, s) in [("micro", self.micro), ("macro", self.macro_), ("weighted", self.weighted)] {
            let _ = writeln!(out, "{name}_precision={}", s.precision);
            let _ = writeln!(out, "{name}_recall={}", s.recall);
            let _ = writeln!(out, "{name}_f1={}", s.f1);
        }
        for c in &self.per_class {
            let id = c.class_id;
            let _ = writeln!(out, "class_{id}_support={}", c.support);
            let _ = writeln!(out, "class_{id}_precision={}", c.scores.precision);
            let _ = writeln!(out, "class_{id}_recall={}", c.scores.recall);
            let _ = writeln!(out, "class_{id}_f1={}", c.scores.f1);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Sample mean and (population) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::LabelSet;

    fn set(v: &[usize]) -> LabelSet {
        v.iter().copied().collect()
    }

    fn labels(rows: &[(&str, &[usize])]) -> LabelMap {
        rows.iter().map(|(id, c)| (id.to_string(), set(c))).collect()
    }

    // Classes: A = 0, B = 1.
    fn worked() -> (PredictionSet, LabelMap) {
        let gold = labels(&[("p1", &[0]), ("p2", &[0, 1])]);
        let pred = PredictionSet::new(labels(&[("p1", &[0]), ("p2", &[0])]));
        (pred, gold)
    }

    #[test]
    fn worked_example_counts() {
        let (pred, gold) = worked();
        let c = class_counts(&pred, &gold, 2).unwrap();
        assert_eq!(c.per_class[0], Counts { tp: 2, fp: 0, fn_: 0 });
        assert_eq!(c.per_class[1], Counts { tp: 0, fp: 0, fn_: 1 });
    }

    #[test]
    fn worked_example_scores() {
        let (pred, gold) = worked();
        let r = evaluate(&pred, &gold, 2).unwrap();
        assert!((r.micro.f1 - 0.8).abs() < 1e-12);
        assert!((r.macro_.f1 - 0.5).abs() < 1e-12);
        assert!((r.weighted.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.micro.precision, 1.0);
    }

    #[test]
    fn perfect_and_disjoint() {
        let gold = labels(&[("a", &[0, 2]), ("b", &[1])]);
        let r = evaluate(&PredictionSet::new(gold.clone()), &gold, 3).unwrap();
        for s in [r.micro, r.macro_, r.weighted] {
            assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        }
        let wrong = PredictionSet::new(labels(&[("a", &[1]), ("b", &[0, 2])]));
        let r = evaluate(&wrong, &gold, 3).unwrap();
        for s in [r.micro, r.macro_, r.weighted] {
            assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn empty_predictions() {
        let gold = labels(&[("a", &[0, 2]), ("b", &[2])]);
        let pred = PredictionSet::new(labels(&[("a", &[]), ("b", &[])]));
        let c = class_counts(&pred, &gold, 3).unwrap();
        for (k, counts) in c.per_class.iter().enumerate() {
            assert_eq!(counts.tp + counts.fp, 0);
            assert_eq!(counts.fn_, [1, 0, 2][k]);
        }
    }

    #[test]
    fn id_mismatch_lists_difference() {
        let gold = labels(&[("a", &[0]), ("b", &[0])]);
        let pred = PredictionSet::new(labels(&[("a", &[0]), ("c", &[0])]));
        match evaluate(&pred, &gold, 1) {
            Err(Error::IdMismatch { only_pred, only_gold }) => {
                assert_eq!(only_pred, vec!["c"]);
                assert_eq!(only_gold, vec!["b"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_gold_is_an_error() {
        let gold = labels(&[("a", &[])]);
        let pred = PredictionSet::new(labels(&[("a", &[0])]));
        assert!(matches!(evaluate(&pred, &gold, 1), Err(Error::EmptyGold)));
    }

    #[test]
    fn zero_support_class_counts_in_macro() {
        let gold = labels(&[("a", &[0])]);
        let pred = PredictionSet::new(labels(&[("a", &[0])]));
        let r = evaluate(&pred, &gold, 4).unwrap();
        assert_eq!(r.macro_.f1, 0.25);
        assert_eq!(r.weighted.f1, 1.0);
    }

    #[test]
    fn kv_format() {
        let (pred, gold) = worked();
        let kv = evaluate(&pred, &gold, 2).unwrap().to_kv();
        assert!(kv.contains("macro_f1=0.5\n"), "{kv}");
        assert!(kv.contains("class_1_support=1\n"));
        let json: serde_json::Value =
            serde_json::from_str(&evaluate(&pred, &gold, 2).unwrap().to_json()).unwrap();
        assert_eq!(json["macro"]["f1"], 0.5);
    }

    #[test]
    fn mean_and_std() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
