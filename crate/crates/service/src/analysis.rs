//! Classification of passages for the service, result filtering and match spans.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sustext_core::classify::{import_scores, threshold_predict, KeywordClassifier, SvmPipeline};
use sustext_core::corpus::{load_documents, load_passages, Document, DocumentFormat, Passage};
use sustext_core::schema::{ClassId, KeywordLexicon, LabelSchema, LabelSet};

use crate::config::{ClassifierMode, ServiceConfig, DEFAULT_THRESHOLD};
use crate::error::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Backend,
    Upload,
}

/// One classified passage as served to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultPassage {
    pub passage_id: String,
    pub text: String,
    pub class_ids: Vec<ClassId>,
    pub source_link: String,
    pub origin: Origin,
}

/// Everything an analysis produced for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub distribution: BTreeMap<ClassId, usize>,
    pub passages: Vec<ResultPassage>,
    pub total: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Class → number of passages carrying it; every schema class is listed.
pub fn distribution<'a>(
    n_classes: usize,
    passages: impl IntoIterator<Item = &'a ResultPassage>,
) -> BTreeMap<ClassId, usize> {
    let mut d: BTreeMap<ClassId, usize> = (0..n_classes).map(|c| (c, 0)).collect();
    for p in passages {
        for &c in &p.class_ids {
            *d.entry(c).or_default() += 1;
        }
    }
    d
}

/// The active classifier for uploaded text.
pub struct Classifier {
    mode: ClassifierMode,
    keyword: KeywordClassifier,
    svm: Option<SvmPipeline>,
}

impl Classifier {
    pub fn new(mode: ClassifierMode, lexicon: &KeywordLexicon, svm: Option<SvmPipeline>) -> Self {
        debug_assert!(mode == ClassifierMode::Keyword || svm.is_some());
        Classifier {
            mode,
            keyword: KeywordClassifier::new(lexicon),
            svm,
        }
    }

    pub fn mode(&self) -> ClassifierMode {
        self.mode
    }

    pub fn classify(&self, text: &str) -> LabelSet {
        let svm = || self.svm.as_ref().map(|m| m.classify(text)).unwrap_or_default();
        match self.mode {
            ClassifierMode::Keyword => self.keyword.classify(text),
            ClassifierMode::Svm => svm(),
            ClassifierMode::KeywordSvm => {
                let mut labels = self.keyword.classify(text);
                labels.extend(svm());
                labels
            }
        }
    }

    /// Classifies passages, keeping only those that receive a class.
    pub fn classify_passages(
        &self,
        passages: &[Passage],
        links: &HashMap<String, String>,
        origin: Origin,
    ) -> Vec<ResultPassage> {
        passages
            .iter()
            .filter_map(|p| {
                let labels = self.classify(&p.text);
                (!labels.is_empty()).then(|| result_passage(p, labels, links, origin))
            })
            .collect()
    }
}

fn result_passage(
    p: &Passage,
    labels: LabelSet,
    links: &HashMap<String, String>,
    origin: Origin,
) -> ResultPassage {
    ResultPassage {
        passage_id: p.id.clone(),
        text: p.text.clone(),
        class_ids: labels.into_iter().collect(),
        source_link: links.get(&p.document_id).cloned().unwrap_or_default(),
        origin,
    }
}

pub fn source_links(documents: &[Document]) -> HashMap<String, String> {
    documents
        .iter()
        .map(|d| (d.id.clone(), d.source_link()))
        .collect()
}

/// Loads and classifies the backend corpus once. Passages come from
/// `passages.jsonl`; `documents.jsonl`, when present, supplies source links.
pub fn load_backend(
    config: &ServiceConfig,
    schema: &LabelSchema,
    classifier: &Classifier,
) -> Result<Vec<ResultPassage>, ServiceError> {
    let Some(dir) = &config.backend.corpus_dir else {
        return Ok(Vec::new());
    };
    let passages = load_passages(dir.join("passages.jsonl"), schema)?;
    let docs_path = dir.join("documents.jsonl");
    let links = if docs_path.exists() {
        source_links(&load_documents(&docs_path, DocumentFormat::Jsonl)?)
    } else {
        HashMap::new()
    };
    let Some(matrix_path) = &config.backend.score_matrix else {
        return Ok(classifier.classify_passages(&passages, &links, Origin::Backend));
    };
    let threshold = config.backend.threshold.unwrap_or(DEFAULT_THRESHOLD);
    let predicted = threshold_predict(&import_scores(matrix_path)?, threshold)?;
    let mut out = Vec::new();
    for p in &passages {
        match predicted.get(&p.id) {
            Some(labels) if !labels.is_empty() => {
                out.push(result_passage(p, labels.clone(), &links, Origin::Backend))
            }
            Some(_) => {}
            None => log::warn!("{}: passage {} has no row in the score matrix", matrix_path.display(), p.id),
        }
    }
    Ok(out)
}

pub fn load_model(dir: &Path) -> Result<SvmPipeline, ServiceError> {
    Ok(SvmPipeline::load(dir)?)
}

/// Lowercases one code point when that keeps it a single code point, so
/// offsets in the folded text equal offsets in the original.
fn fold(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Non-overlapping, case-insensitive occurrences of `query` in `text`, as
/// half-open code-point ranges in increasing order.
pub fn match_spans(text: &str, query: &str) -> Vec<[usize; 2]> {
    let needle: Vec<char> = query.chars().map(fold).collect();
    if needle.is_empty() {
        return Vec::new();
    }
    let hay: Vec<char> = text.chars().map(fold).collect();
    let mut spans = Vec::new();
    let mut i = 0;
    while i + needle.len() <= hay.len() {
        if hay[i..i + needle.len()] == needle[..] {
            spans.push([i, i + needle.len()]);
            i += needle.len();
        } else {
            i += 1;
        }
    }
    spans
}

/// Filter and paging parameters of a results request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchQuery {
    pub class_filter: Option<ClassId>,
    pub text_query: Option<String>,
    pub page: usize,
    pub page_size: usize,
}

pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 500;
pub const NO_RESULTS: &str = "no results found";

impl Default for SearchQuery {
    fn default() -> Self {
        SearchQuery {
            class_filter: None,
            text_query: None,
            page: 1,
            page_size: DEFAULT_PAGE_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PagePassage {
    #[serde(flatten)]
    pub passage: ResultPassage,
    pub match_spans: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultPage {
    pub distribution: BTreeMap<ClassId, usize>,
    pub passages: Vec<PagePassage>,
    /// Passages matching the filters, across all pages.
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

/// Class filter, then case-insensitive substring filter, then paging. The
/// distribution covers every filtered passage, not just the page.
pub fn query_results(result: &AnalysisResult, q: &SearchQuery, n_classes: usize) -> ResultPage {
    let text_query = q.text_query.as_deref().filter(|s| !s.is_empty());
    let filtered: Vec<(&ResultPassage, Vec<[usize; 2]>)> = result
        .passages
        .iter()
        .filter(|p| q.class_filter.is_none_or(|c| p.class_ids.contains(&c)))
        .filter_map(|p| match text_query {
            None => Some((p, Vec::new())),
            Some(s) => {
                let spans = match_spans(&p.text, s);
                (!spans.is_empty()).then_some((p, spans))
            }
        })
        .collect();
    let total = filtered.len();
    let distribution = distribution(n_classes, filtered.iter().map(|(p, _)| *p));
    let passages = filtered
        .into_iter()
        .skip((q.page - 1).saturating_mul(q.page_size))
        .take(q.page_size)
        .map(|(p, spans)| PagePassage {
            passage: p.clone(),
            match_spans: spans,
        })
        .collect();
    let message = if total == 0 {
        Some(NO_RESULTS.to_string())
    } else {
        None
    };
    ResultPage {
        distribution,
        passages,
        total,
        page: q.page,
        page_size: q.page_size,
        message,
    }
}
