//! Rule-based sentence splitter.
//!
//! A boundary is a run of `.`, `!` or `?` (optionally followed by closing
//! quotes or brackets), then whitespace, then an uppercase letter, a digit or
//! an opening quote. A period ending a listed abbreviation is not a boundary.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::OnceLock;

const ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AbbrevKind {
    Always,
    /// Only before a token starting with a digit ("No. 5").
    Numeric,
}

fn abbreviations() -> &'static HashMap<String, AbbrevKind> {
    static MAP: OnceLock<HashMap<String, AbbrevKind>> = OnceLock::new();
    MAP.get_or_init(|| {
        ABBREVIATIONS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut parts = l.split_whitespace();
                let abbrev = parts.next().unwrap_or_default().to_lowercase();
                let kind = match parts.next() {
                    Some("numeric") => AbbrevKind::Numeric,
                    _ => AbbrevKind::Always,
                };
                (abbrev, kind)
            })
            .collect()
    })
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | '”' | '’' | ')' | ']' | '»')
}

fn is_opening_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '“' | '‘' | '«')
}

fn opens_sentence(c: char) -> bool {
    c.is_uppercase() || c.is_ascii_digit() || is_opening_quote(c)
}

/// Byte ranges of the sentences of `text`, in order, trimmed of surrounding
/// whitespace.
pub fn segment_sentences(text: &str) -> Vec<Range<usize>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let n = chars.len();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < n {
        let (pos, c) = chars[i];
        if start.is_none() && !c.is_whitespace() {
            start = Some(pos);
        }
        if !is_terminator(c) {
            i += 1;
            continue;
        }
        let mut j = i + 1;
        while j < n && (is_terminator(chars[j].1) || is_closing(chars[j].1)) {
            j += 1;
        }
        if j < n && chars[j].1.is_whitespace() {
            let mut k = j;
            while k < n && chars[k].1.is_whitespace() {
                k += 1;
            }
            if k < n && opens_sentence(chars[k].1) && !abbreviation_blocks(text, &chars, i, j, k) {
                if let Some(s) = start.take() {
                    spans.push(s..chars[j].0);
                }
                i = k;
                continue;
            }
        }
        i = j;
    }
    if let Some(s) = start {
        let end = text.trim_end().len();
        if end > s {
            spans.push(s..end);
        }
    }
    spans
}

/// Whether the period run `chars[i..j]` ends a known abbreviation; `k` is
/// the first character of the following token.
fn abbreviation_blocks(text: &str, chars: &[(usize, char)], i: usize, j: usize, k: usize) -> bool {
    if chars[i].1 != '.' || j != i + 1 {
        return false;
    }
    let end = chars[i].0 + 1;
    let word_start = text[..end]
        .rfind(char::is_whitespace)
        .map(|p| p + text[p..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    let word = text[word_start..end]
        .trim_start_matches(|c: char| is_opening_quote(c) || c == '(' || c == '[')
        .to_lowercase();
    match abbreviations().get(&word) {
        Some(AbbrevKind::Always) => true,
        Some(AbbrevKind::Numeric) => chars[k].1.is_ascii_digit(),
        None => false,
    }
}
