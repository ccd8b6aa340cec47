//! Tokenization, stopwords and keyword phrase matching shared by the corpus
//! pipeline and the classifiers.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use crate::schema::{ClassId, KeywordLexicon};

const STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Stopwords that are also frequent words in other European languages
/// ("in", "so", "was", ...). They are excluded from language detection.
const CROSS_LINGUAL: &[&str] = &["a", "am", "an", "as", "in", "is", "me", "on", "so", "was", "will"];

/// The bundled English stopword list.
pub fn stopwords() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        STOPWORDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_owned)
            .collect()
    })
}

/// Stopwords that only occur in English; used by [`crate::corpus::is_english`].
pub fn english_markers() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        stopwords()
            .iter()
            .filter(|w| !CROSS_LINGUAL.contains(&w.as_str()))
            .cloned()
            .collect()
    })
}

#[inline]
pub fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Lowercased runs of word characters.
pub fn word_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !is_word_char(c))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Lowercases and collapses every whitespace run into a single space.
pub fn normalize_for_matching(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Byte offsets of every whole-word occurrence of `needle` in `haystack`.
/// Both sides must already be normalized with [`normalize_for_matching`].
pub fn phrase_occurrences(haystack: &str, needle: &str) -> Vec<usize> {
    if needle.is_empty() {
        return Vec::new();
    }
    haystack
        .match_indices(needle)
        .filter(|&(start, _)| {
            let before = haystack[..start].chars().next_back();
            let after = haystack[start + needle.len()..].chars().next();
            !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
        })
        .map(|(start, _)| start)
        .collect()
}

pub fn contains_phrase(haystack: &str, needle: &str) -> bool {
    !phrase_occurrences(haystack, needle).is_empty()
}

/// Matches found in one text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordMatches {
    pub brands: BTreeSet<String>,
    pub issues: BTreeMap<ClassId, BTreeSet<String>>,
}

impl KeywordMatches {
    pub fn is_empty(&self) -> bool {
        self.brands.is_empty() && self.issues.is_empty()
    }
}

/// A lexicon compiled for case-insensitive, word-bounded phrase matching.
#[derive(Debug, Clone)]
pub struct KeywordMatcher {
    brands: Vec<(String, String)>,
    issues: Vec<(ClassId, String, String)>,
}

impl KeywordMatcher {
    pub fn new(lexicon: &KeywordLexicon) -> Self {
        let brands = lexicon
            .brands
            .iter()
            .map(|b| (normalize_for_matching(b), b.clone()))
            .collect();
        let issues = lexicon
            .issue_keywords
            .iter()
            .flat_map(|(&class, kws)| {
                kws.iter()
                    .map(move |k| (class, normalize_for_matching(k), k.clone()))
            })
            .collect();
        KeywordMatcher { brands, issues }
    }

    pub fn find(&self, text: &str) -> KeywordMatches {
        let norm = normalize_for_matching(text);
        let mut matches = KeywordMatches::default();
        for (needle, original) in &self.brands {
            if contains_phrase(&norm, needle) {
                matches.brands.insert(original.clone());
            }
        }
        for (class, needle, original) in &self.issues {
            if contains_phrase(&norm, needle) {
                matches
                    .issues
                    .entry(*class)
                    .or_default()
                    .insert(original.clone());
            }
        }
        matches
    }

    /// Classes with at least one issue-keyword hit.
    pub fn issue_classes(&self, text: &str) -> BTreeSet<ClassId> {
        let norm = normalize_for_matching(text);
        self.issues
            .iter()
            .filter(|(_, needle, _)| contains_phrase(&norm, needle))
            .map(|(class, _, _)| *class)
            .collect()
    }
}
