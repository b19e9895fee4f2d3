//! Tokenization shared by every text-facing module.
//!
//! A token is a maximal run of alphanumeric characters, lowercased. Everything
//! else (whitespace, punctuation, emoji) separates tokens.

/// Split `text` into lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Split `text` into sentences on `.`, `!`, `?` and newlines, then tokenize
/// each one. Empty sentences are dropped.
pub fn tokenize_sentences(text: &str) -> Vec<Vec<String>> {
    text.split(['.', '!', '?', '\n', '\u{2026}'])
        .map(tokenize)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Number of times `needle` occurs as a contiguous subsequence of `haystack`.
pub(crate) fn count_phrase<S: AsRef<str>>(haystack: &[String], needle: &[S]) -> usize {
    if needle.is_empty() || needle.len() > haystack.len() {
        return 0;
    }
    haystack
        .windows(needle.len())
        .filter(|w| w.iter().zip(needle).all(|(a, b)| a == b.as_ref()))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_on_punctuation_and_lowercases() {
        assert_eq!(
            tokenize("He sent Nudes!! (cyber-stalker)"),
            vec!["he", "sent", "nudes", "cyber", "stalker"]
        );
        assert!(tokenize("  ...  ").is_empty());
    }

    #[test]
    fn curly_apostrophe_splits_like_ascii() {
        assert_eq!(tokenize("I’m a minor"), tokenize("I'm a minor"));
    }

    #[test]
    fn sentences() {
        let s = tokenize_sentences("Great app. He is creepy! ok?");
        assert_eq!(s.len(), 3);
        assert_eq!(s[1], vec!["he", "is", "creepy"]);
    }

    #[test]
    fn phrase_counting() {
        let hay = tokenize("fake profile and another fake profile");
        assert_eq!(count_phrase(&hay, &["fake", "profile"]), 2);
        assert_eq!(count_phrase(&hay, &["profile", "fake"]), 0);
    }
}
