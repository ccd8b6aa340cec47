use crate::text::english_markers;

/// Tokens inspected from the start of the text.
pub const LANGUAGE_WINDOW: usize = 200;
/// Minimum share of English marker words.
pub const ENGLISH_MIN_RATIO: f64 = 0.05;
/// Shorter texts are accepted without a decision.
pub const LANGUAGE_MIN_TOKENS: usize = 10;

/// Stopword-ratio language check over the first 200 whitespace tokens.
pub fn is_english(text: &str) -> bool {
    let markers = english_markers();
    let tokens: Vec<String> = text
        .split_whitespace()
        .take(LANGUAGE_WINDOW)
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .collect();
    if tokens.len() < LANGUAGE_MIN_TOKENS {
        return true;
    }
    let hits = tokens.iter().filter(|t| markers.contains(t.as_str())).count();
    hits as f64 / tokens.len() as f64 >= ENGLISH_MIN_RATIO
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn english_sentence() {
        assert!(is_english(
            "The workers at the factory were not paid the minimum wage required by the law"
        ));
    }

    #[test]
    fn german_sentence() {
        // 15 tokens; none are English-only markers ("in" is shared with German).
        assert!(!is_english(
            "Müller GmbH zahlt den Arbeitern keinen fairen Lohn für die Arbeit in der Fabrik heute"
        ));
    }

    #[test]
    fn short_text_gets_benefit_of_doubt() {
        assert!(is_english("wage"));
        assert!(is_english(""));
    }

    #[test]
    fn only_first_200_tokens_count() {
        let german = "Lohn ".repeat(200);
        let text = format!("{german} {}", "the ".repeat(500));
        assert!(!is_english(&text));
    }
}
