use crate::corpus::Passage;
use crate::schema::{KeywordLexicon, LabelSet};
use crate::text::KeywordMatcher;

/// Keyword-matching baseline: a passage gets every class with at least one
/// issue-keyword hit (same matching rules as passage filtering).
pub fn keyword_classify(passage: &Passage, lexicon: &KeywordLexicon) -> LabelSet {
    KeywordMatcher::new(lexicon).issue_classes(&passage.text)
}

/// The keyword baseline with the lexicon compiled once.
#[derive(Debug, Clone)]
pub struct KeywordClassifier {
    matcher: KeywordMatcher,
}

impl KeywordClassifier {
    pub fn new(lexicon: &KeywordLexicon) -> Self {
        KeywordClassifier {
            matcher: KeywordMatcher::new(lexicon),
        }
    }

    pub fn classify(&self, text: &str) -> LabelSet {
        self.matcher.issue_classes(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    fn passage(text: &str) -> Passage {
        Passage {
            id: "p".into(),
            document_id: "d".into(),
            sentence_indices: [0, 0],
            text: text.into(),
            matched_brands: BTreeSet::new(),
            matched_issue_keywords: BTreeMap::new(),
            gold_labels: None,
        }
    }

    #[test]
    fn two_classes() {
        let lex = KeywordLexicon::builtin();
        let p = passage("Reports of forced labour and new climate targets at Zara.");
        assert_eq!(keyword_classify(&p, &lex), BTreeSet::from([2, 11]));
    }

    #[test]
    fn no_keywords() {
        let lex = KeywordLexicon::builtin();
        assert!(keyword_classify(&passage("Zara opened a store."), &lex).is_empty());
    }

    #[test]
    fn set_semantics() {
        let lex = KeywordLexicon::builtin();
        let p = passage("Overtime pay and a living wage were denied");
        assert_eq!(keyword_classify(&p, &lex), BTreeSet::from([0]));
    }
}
