//! TF-IDF over word n-grams.
//!
//! Tokens are lowercase runs of word characters with stopwords removed;
//! n-grams of length `1..=max_ngram` are built from the remaining tokens.
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, term weights are raw counts
//! times idf, and every transformed vector is L2-normalized.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::sparse::SparseVector;
use crate::error::{Error, Result};
use crate::text::{stopwords, word_tokens};

pub const MAX_NGRAM: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    max_ngram: usize,
    vocabulary: HashMap<String, usize>,
    terms: Vec<String>,
    idf: Vec<f64>,
    stopwords: BTreeSet<String>,
}

fn ngrams(tokens: &[String], max_ngram: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in 1..=max_ngram.min(tokens.len()) {
        out.extend(tokens.windows(n).map(|w| w.join(" ")));
    }
    out
}

impl TfidfModel {
    fn analyze(&self, text: &str) -> Vec<String> {
        let tokens: Vec<String> = word_tokens(text)
            .into_iter()
            .filter(|t| !self.stopwords.contains(t))
            .collect();
        ngrams(&tokens, self.max_ngram)
    }

    pub fn max_ngram(&self) -> usize {
        self.max_ngram
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(String::as_str)
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.index_of(term).map(|i| self.idf[i])
    }

    pub fn idf_values(&self) -> &[f64] {
        &self.idf
    }

    pub fn transform(&self, text: &str) -> SparseVector {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for gram in self.analyze(text) {
            if let Some(&i) = self.vocabulary.get(&gram) {
                *counts.entry(i).or_default() += 1.0;
            }
        }
        let mut v = SparseVector::from_pairs(
            counts
                .into_iter()
                .map(|(i, c)| (i, c * self.idf[i]))
                .collect(),
        );
        v.normalize();
        v
    }

    pub fn transform_all<S: AsRef<str>>(&self, texts: &[S]) -> Vec<SparseVector> {
        texts.iter().map(|t| self.transform(t.as_ref())).collect()
    }

    /// Writes `tfidf.tsv`: a header line, the stopword line, then one
    /// `ngram<TAB>idf` row per column in index order.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join("tfidf.tsv");
        let mut out = String::new();
        let _ = writeln!(out, "#tfidf\tv1\tmax_ngram={}", self.max_ngram);
        let stop: Vec<&str> = self.stopwords.iter().map(String::as_str).collect();
        let _ = writeln!(out, "#stopwords\t{}", stop.join(" "));
        out.push_str("ngram\tidf\n");
        for (term, idf) in self.terms.iter().zip(&self.idf) {
            let _ = writeln!(out, "{term}\t{idf}");
        }
        std::fs::write(&path, out).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join("tfidf.tsv");
        let body = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let bad = |message: String| Error::Artifact {
            path: path.clone(),
            message,
        };
        let mut lines = body.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let max_ngram = header
            .strip_prefix("#tfidf\tv1\tmax_ngram=")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|n| (1..=MAX_NGRAM).contains(n))
            .ok_or_else(|| bad(format!("bad header {header:?}")))?;
        let stop_line = lines.next().unwrap_or_default();
        let stopwords = stop_line
            .strip_prefix("#stopwords\t")
            .ok_or_else(|| bad("missing stopword line".into()))?
            .split_whitespace()
            .map(str::to_owned)
            .collect();
        if lines.next() != Some("ngram\tidf") {
            return Err(bad("missing column header".into()));
        }
        let mut terms = Vec::new();
        let mut idf = Vec::new();
        for (k, line) in lines.enumerate() {
            let (term, value) = line
                .split_once('\t')
                .ok_or_else(|| bad(format!("row {k}: expected two columns")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| bad(format!("row {k}: bad idf {value:?}")))?;
            if !(value > 0.0 && value.is_finite()) {
                return Err(bad(format!("row {k}: idf must be positive")));
            }
            terms.push(term.to_owned());
            idf.push(value);
        }
        let vocabulary: HashMap<String, usize> =
            terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if vocabulary.len() != terms.len() {
            return Err(bad("duplicate n-gram".into()));
        }
        Ok(TfidfModel {
            max_ngram,
            vocabulary,
            terms,
            idf,
            stopwords,
        })
    }
}

/// Fits vocabulary and idf weights on `texts`. Columns are ordered lexicographically.
pub fn fit_tfidf<S: AsRef<str>>(texts: &[S], max_ngram: usize) -> Result<TfidfModel> {
    if texts.is_empty() {
        return Err(Error::Vectorizer("no training texts".into()));
    }
    if !(1..=MAX_NGRAM).contains(&max_ngram) {
        return Err(Error::Vectorizer(format!(
            "max_ngram must be in 1..={MAX_NGRAM}, got {max_ngram}"
        )));
    }
    let mut model = TfidfModel {
        max_ngram,
        vocabulary: HashMap::new(),
        terms: Vec::new(),
        idf: Vec::new(),
        stopwords: stopwords().iter().cloned().collect(),
    };
    let mut df: HashMap<String, usize> = HashMap::new();
    for text in texts {
        let grams: BTreeSet<String> = model.analyze(text.as_ref()).into_iter().collect();
        for g in grams {
            *df.entry(g).or_default() += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::Vectorizer(
            "every text is empty after stopword removal".into(),
        ));
    }
    let mut terms: Vec<String> = df.keys().cloned().collect();
    terms.sort();
    let n = texts.len() as f64;
    model.idf = terms
        .iter()
        .map(|t| ((1.0 + n) / (1.0 + df[t] as f64)).ln() + 1.0)
        .collect();
    model.vocabulary = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    model.terms = terms;
    Ok(model)
}
