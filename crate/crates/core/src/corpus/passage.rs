use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::document::Document;
use super::segment::segment_sentences;
use crate::error::{Error, Result};
use crate::schema::{ClassId, KeywordLexicon, LabelMap, LabelSchema, LabelSet};
use crate::text::KeywordMatcher;

pub const DEFAULT_WINDOW: usize = 3;

/// Up to `window` consecutive sentences of one document; the classification unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Passage {
    pub id: String,
    pub document_id: String,
    /// First and last sentence index, inclusive.
    pub sentence_indices: [usize; 2],
    pub text: String,
    #[serde(default)]
    pub matched_brands: BTreeSet<String>,
    #[serde(default)]
    pub matched_issue_keywords: BTreeMap<ClassId, BTreeSet<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_labels: Option<LabelSet>,
}

impl Passage {
    pub fn passage_id(document_id: &str, ordinal: usize) -> String {
        format!("{document_id}#{ordinal}")
    }
}

/// Splits a document into consecutive, non-overlapping windows of `window`
/// sentences. The last window may be shorter.
///
/// Panics if `window` is zero.
pub fn window_passages(document: &Document, window: usize) -> Vec<Passage> {
    assert!(window >= 1, "window must be at least one sentence");
    let spans = segment_sentences(&document.text);
    spans
        .chunks(window)
        .enumerate()
        .map(|(k, chunk)| {
            let first = k * window;
            let range = chunk[0].start..chunk[chunk.len() - 1].end;
            Passage {
                id: Passage::passage_id(&document.id, k),
                document_id: document.id.clone(),
                sentence_indices: [first, first + chunk.len() - 1],
                text: document.text[range].to_owned(),
                matched_brands: BTreeSet::new(),
                matched_issue_keywords: BTreeMap::new(),
                gold_labels: None,
            }
        })
        .collect()
}

/// Keeps passages mentioning a brand or an issue keyword, recording the matches.
pub fn filter_passages(passages: Vec<Passage>, lexicon: &KeywordLexicon) -> Vec<Passage> {
    let matcher = KeywordMatcher::new(lexicon);
    filter_with(passages, &matcher)
}

pub fn filter_with(passages: Vec<Passage>, matcher: &KeywordMatcher) -> Vec<Passage> {
    passages
        .into_iter()
        .filter_map(|mut p| {
            let m = matcher.find(&p.text);
            if m.is_empty() {
                return None;
            }
            p.matched_brands = m.brands;
            p.matched_issue_keywords = m.issues;
            Some(p)
        })
        .collect()
}

/// Outcome of running documents through language check, windowing and filtering.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub documents: usize,
    pub non_english_documents: Vec<String>,
    pub passages_total: usize,
    pub passages_kept: usize,
    pub passages_dropped: usize,
    /// Class id → number of kept passages with an issue-keyword hit for it.
    pub class_keyword_hits: BTreeMap<ClassId, usize>,
    pub brand_hits: BTreeMap<String, usize>,
}

/// The full preprocessing chain: English check, three-sentence windows, keyword filter.
pub fn build_passages(documents: &[Document], lexicon: &KeywordLexicon) -> (Vec<Passage>, IngestReport) {
    let matcher = KeywordMatcher::new(lexicon);
    let mut report = IngestReport {
        documents: documents.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for doc in documents {
        if !super::is_english(&doc.text) {
            report.non_english_documents.push(doc.id.clone());
            continue;
        }
        let windows = window_passages(doc, DEFAULT_WINDOW);
        report.passages_total += windows.len();
        kept.extend(filter_with(windows, &matcher));
    }
    report.passages_kept = kept.len();
    report.passages_dropped = report.passages_total - report.passages_kept;
    for p in &kept {
        for &class in p.matched_issue_keywords.keys() {
            *report.class_keyword_hits.entry(class).or_default() += 1;
        }
        for brand in &p.matched_brands {
            *report.brand_hits.entry(brand.clone()).or_default() += 1;
        }
    }
    (kept, report)
}

/// Reads a passage JSON Lines file and checks every gold label against `schema`.
pub fn load_passages(path: impl AsRef<Path>, schema: &LabelSchema) -> Result<Vec<Passage>> {
    let path = path.as_ref();
    let passages: Vec<Passage> = crate::io::read_jsonl(path)?;
    let mut ids = BTreeSet::new();
    for (i, p) in passages.iter().enumerate() {
        let bad = |message: String| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        if !ids.insert(p.id.as_str()) {
            return Err(bad(format!("duplicate passage id {}", p.id)));
        }
        if let Some(class) = p
            .gold_labels
            .iter()
            .flatten()
            .find(|&&c| !schema.contains(c))
        {
            return Err(bad(format!("gold label {class} outside the schema")));
        }
    }
    Ok(passages)
}

/// Gold labels of the passages that have them.
pub fn gold_map<'a>(passages: impl IntoIterator<Item = &'a Passage>) -> LabelMap {
    passages
        .into_iter()
        .filter_map(|p| p.gold_labels.clone().map(|g| (p.id.clone(), g)))
        .collect()
}
