use std::collections::BTreeSet;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

/// Whether trends are single words or adjacent word pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NgramMode {
    #[default]
    Unigram,
    Bigram,
}

impl std::str::FromStr for NgramMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unigram" | "word" | "words" => Ok(NgramMode::Unigram),
            "bigram" | "bigrams" => Ok(NgramMode::Bigram),
            other => Err(format!("unknown token mode '{other}' (expected unigram or bigram)")),
        }
    }
}

/// Text normalization settings plus the author-exclusion hook.
///
/// Stopwords and excluded authors are kept in ordered sets so the
/// configuration serializes deterministically (it is part of the cache key).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    stopwords: BTreeSet<String>,
    pub mode: NgramMode,
    author_exclusions: BTreeSet<String>,
    /// Remove interior punctuation too ("XMM-Newton" -> "xmmnewton").
    pub fold_interior_punctuation: bool,
}

impl TokenizerConfig {
    pub fn new(mode: NgramMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn with_stopwords<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        self.stopwords.extend(
            words
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty()),
        );
        self
    }

    pub fn with_excluded_authors<I, S>(mut self, authors: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.author_exclusions.extend(authors.into_iter().map(Into::into));
        self
    }

    pub fn stopwords(&self) -> &BTreeSet<String> {
        &self.stopwords
    }

    pub fn author_exclusions(&self) -> &BTreeSet<String> {
        &self.author_exclusions
    }

    pub fn is_excluded(&self, author: &str) -> bool {
        self.author_exclusions.contains(author)
    }
}

/// Reads a plain-text stopword list, one word per line. Blank lines are skipped.
pub fn read_stopwords<R: BufRead>(reader: R) -> std::io::Result<Vec<String>> {
    let mut words = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let word = line.trim();
        if !word.is_empty() {
            words.push(word.to_lowercase());
        }
    }
    Ok(words)
}

fn normalize_word(raw: &str, fold: bool) -> String {
    let lower = raw.to_lowercase();
    let trimmed = lower.trim_matches(|c: char| !c.is_alphanumeric());
    if fold {
        trimmed.chars().filter(|c| c.is_alphanumeric()).collect()
    } else {
        trimmed.to_string()
    }
}

/// Splits `text` into normalized tokens.
///
/// Words are lowercased, split on whitespace and stripped of leading and
/// trailing non-alphanumeric characters; interior hyphens and apostrophes
/// survive. Stopwords are removed before bigrams are formed, so
/// "fellowship of the ring" yields `fellowship-ring`.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let words: Vec<String> = text
        .split_whitespace()
        .map(|w| normalize_word(w, config.fold_interior_punctuation))
        .filter(|w| !w.is_empty() && !config.stopwords.contains(w))
        .collect();
    match config.mode {
        NgramMode::Unigram => words,
        NgramMode::Bigram => words
            .windows(2)
            .map(|pair| format!("{}-{}", pair[0], pair[1]))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unigrams_drop_stopwords_and_punctuation() {
        let cfg = TokenizerConfig::new(NgramMode::Unigram).with_stopwords(["the"]);
        assert_eq!(tokenize("The Two Towers!", &cfg), vec!["two", "towers"]);
    }

    #[test]
    fn bigrams_skip_removed_stopwords() {
        let cfg = TokenizerConfig::new(NgramMode::Bigram).with_stopwords(["of", "the"]);
        assert_eq!(tokenize("fellowship of the ring", &cfg), vec!["fellowship-ring"]);
    }

    #[test]
    fn empty_text_gives_no_tokens() {
        let cfg = TokenizerConfig::default();
        assert!(tokenize("", &cfg).is_empty());
        assert!(tokenize("  ... !!! ", &cfg).is_empty());
    }

    #[test]
    fn interior_punctuation() {
        let mut cfg = TokenizerConfig::default();
        assert_eq!(tokenize("(XMM-Newton) don't", &cfg), vec!["xmm-newton", "don't"]);
        cfg.fold_interior_punctuation = true;
        assert_eq!(tokenize("(XMM-Newton) don't", &cfg), vec!["xmmnewton", "dont"]);
    }

    #[test]
    fn stopwords_are_lowercased() {
        let cfg = TokenizerConfig::default().with_stopwords(["The", " AND "]);
        assert!(cfg.stopwords().contains("the"));
        assert!(cfg.stopwords().contains("and"));
        assert_eq!(tokenize("THE cat AND dog", &cfg), vec!["cat", "dog"]);
    }

    #[test]
    fn stopword_file() {
        let words = read_stopwords("the\n\nOf\n  a \n".as_bytes()).unwrap();
        assert_eq!(words, vec!["the", "of", "a"]);
    }

    proptest! {
        #[test]
        fn tokens_are_normalized(text in "[ -~]{0,80}", bigram in any::<bool>()) {
            let mode = if bigram { NgramMode::Bigram } else { NgramMode::Unigram };
            let cfg = TokenizerConfig::new(mode).with_stopwords(["a", "the"]);
            let tokens = tokenize(&text, &cfg);
            prop_assert_eq!(&tokens, &tokenize(&text, &cfg));
            for t in &tokens {
                prop_assert!(!t.is_empty());
                prop_assert_eq!(t.to_lowercase(), t.clone());
                prop_assert!(t.chars().next().unwrap().is_alphanumeric());
                prop_assert!(t.chars().last().unwrap().is_alphanumeric());
                if !bigram {
                    prop_assert!(t != "a" && t != "the");
                }
            }
        }
    }
}
