//! Score matrices from external models and probability thresholding.
//!
//! CSV layout: header `passage_id,kind,c0,...,c18`; `kind` is `logit` or
//! `decision` and must be the same on every row.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{ClassId, LabelMap, LabelSet, NUM_CLASSES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    Logit,
    Decision,
}

impl ScoreKind {
    fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Logit => "logit",
            ScoreKind::Decision => "decision",
        }
    }
}

/// Raw per-class scores for a list of passages.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    pub kind: ScoreKind,
    pub passage_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Predicted class sets per passage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub labels: LabelMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_used: Option<f64>,
}

impl PredictionSet {
    pub fn new(labels: LabelMap) -> Self {
        PredictionSet {
            labels,
            threshold_used: None,
        }
    }

    pub fn get(&self, passage_id: &str) -> Option<&LabelSet> {
        self.labels.get(passage_id)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

impl FromIterator<(String, LabelSet)> for PredictionSet {
    fn from_iter<I: IntoIterator<Item = (String, LabelSet)>>(iter: I) -> Self {
        PredictionSet::new(iter.into_iter().collect())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Predicts class `c` for a passage iff `sigmoid(score) >= threshold`.
pub fn threshold_predict(scores: &ScoreMatrix, threshold: f64) -> Result<PredictionSet> {
    if scores.kind == ScoreKind::Decision {
        return Err(Error::DecisionScores);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Threshold(threshold));
    }
    let labels = scores
        .passage_ids
        .iter()
        .zip(&scores.rows)
        .map(|(id, row)| {
            let set: LabelSet = row
                .iter()
                .enumerate()
                .filter(|(_, &z)| sigmoid(z) >= threshold)
                .map(|(c, _)| c as ClassId)
                .collect();
            (id.clone(), set)
        })
        .collect();
    Ok(PredictionSet {
        labels,
        threshold_used: Some(threshold),
    })
}

impl ScoreMatrix {
    pub fn n_classes(&self) -> usize {
        self.rows.first().map_or(NUM_CLASSES, Vec::len)
    }

    pub fn row(&self, passage_id: &str) -> Option<&[f64]> {
        self.passage_ids
            .iter()
            .position(|p| p == passage_id)
            .map(|i| self.rows[i].as_slice())
    }

    pub fn by_passage(&self) -> BTreeMap<&str, &[f64]> {
        self.passage_ids
            .iter()
            .map(String::as_str)
            .zip(self.rows.iter().map(Vec::as_slice))
            .collect()
    }
}

/// Reads a 19-class score-matrix CSV.
pub fn import_scores(path: impl AsRef<Path>) -> Result<ScoreMatrix> {
    import_scores_with(path, NUM_CLASSES)
}

pub fn import_scores_with(path: impl AsRef<Path>, n_classes: usize) -> Result<ScoreMatrix> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::ScoreMatrix(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::ScoreMatrix(e.to_string()))?
        .clone();
    if headers.get(0) != Some("passage_id") || headers.get(1) != Some("kind") {
        return Err(Error::ScoreMatrix(
            "header must start with passage_id,kind".into(),
        ));
    }
    for (k, name) in headers.iter().skip(2).enumerate() {
        let class = name
            .strip_prefix('c')
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| Error::ScoreMatrix(format!("bad class column {name:?}")))?;
        if class >= n_classes {
            return Err(Error::UnknownClass(class));
        }
        if class != k {
            return Err(Error::ScoreMatrix(format!(
                "class columns must be c0..c{} in order; found {name} at position {k}",
                n_classes - 1
            )));
        }
    }
    if headers.len() - 2 != n_classes {
        return Err(Error::ScoreMatrix(format!(
            "expected {n_classes} class columns, found {}",
            headers.len() - 2
        )));
    }

    let mut kind = None;
    let mut seen = HashSet::new();
    let mut passage_ids = Vec::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::ScoreMatrix(e.to_string()))?;
        let id = record.get(0).unwrap_or_default().to_owned();
        if id.is_empty() {
            return Err(Error::ScoreMatrix("row with empty passage_id".into()));
        }
        let row_kind = match record.get(1) {
            Some("logit") => ScoreKind::Logit,
            Some("decision") => ScoreKind::Decision,
            other => {
                return Err(Error::ScoreMatrix(format!(
                    "passage {id}: unknown kind {other:?}"
                )))
            }
        };
        if *kind.get_or_insert(row_kind) != row_kind {
            return Err(Error::ScoreMatrix(format!(
                "passage {id}: mixed score kinds in one matrix"
            )));
        }
        if record.len() - 2 != n_classes {
            return Err(Error::ScoreMatrix(format!(
                "passage {id}: expected {n_classes} scores, found {}",
                record.len() - 2
            )));
        }
        let row = record
            .iter()
            .skip(2)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::ScoreMatrix(format!("passage {id}: bad score {v:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if !seen.insert(id.clone()) {
            return Err(Error::ScoreMatrix(format!("duplicate row for passage {id}")));
        }
        passage_ids.push(id);
        rows.push(row);
    }
    Ok(ScoreMatrix {
        kind: kind.unwrap_or(ScoreKind::Logit),
        passage_ids,
        rows,
    })
}

pub fn export_scores(scores: &ScoreMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |e: csv::Error| Error::ScoreMatrix(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let mut header = vec!["passage_id".to_string(), "kind".to_string()];
    header.extend((0..scores.n_classes()).map(|c| format!("c{c}")));
    w.write_record(&header).map_err(io)?;
    for (id, row) in scores.passage_ids.iter().zip(&scores.rows) {
        let mut rec = vec![id.clone(), scores.kind.as_str().to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
