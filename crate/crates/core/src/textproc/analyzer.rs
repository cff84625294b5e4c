//! Lexical analysis for BM25: lowercase, split on non-alphanumeric runs,
//! drop English stopwords, Porter-stem.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::porter;
use crate::error::Result;
use crate::fsio;

const DEFAULT_STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// A normalized index/query term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(String);

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        Token(surface.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parses a one-entry-per-line list. Blank lines and `#` comments are skipped.
pub(crate) fn parse_word_list(contents: &str) -> BTreeSet<String> {
    contents
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
pub struct Analyzer {
    stopwords: BTreeSet<String>,
    remove_stopwords: bool,
    stem: bool,
    fingerprint: String,
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::english()
    }
}

impl Analyzer {
    /// The default chain: shipped 33-word stopword list plus Porter stemming.
    pub fn english() -> Self {
        Self::build(parse_word_list(DEFAULT_STOPWORDS), true, true)
    }

    pub fn with_stopwords(stopwords: impl IntoIterator<Item = String>) -> Self {
        let words = stopwords.into_iter().map(|w| w.to_lowercase()).collect();
        Self::build(words, true, true)
    }

    pub fn from_stopword_file(path: &Path) -> Result<Self> {
        let contents = fsio::read_to_string(path)?;
        Ok(Self::build(parse_word_list(&contents), true, true))
    }

    pub fn stemming(self, on: bool) -> Self {
        Self::build(self.stopwords, self.remove_stopwords, on)
    }

    pub fn stopword_removal(self, on: bool) -> Self {
        Self::build(self.stopwords, on, self.stem)
    }

    fn build(stopwords: BTreeSet<String>, remove_stopwords: bool, stem: bool) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"analyzer-v1\n");
        hasher.update(format!("stem={stem}\nstop={remove_stopwords}\n").as_bytes());
        if remove_stopwords {
            for w in &stopwords {
                hasher.update(w.as_bytes());
                hasher.update(b"\n");
            }
        }
        let fingerprint = hex::encode(hasher.finalize())[..16].to_string();
        Analyzer {
            stopwords,
            remove_stopwords,
            stem,
            fingerprint,
        }
    }

    /// Stable hash of the configuration; persisted alongside an index.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn analyze(&self, text: &str) -> Vec<Token> {
        let lower = text.to_lowercase();
        let mut out = Vec::new();
        for word in lower.split(|c: char| !(c.is_alphanumeric() || is_apostrophe(c))) {
            let word = strip_possessive(word);
            for piece in word.split(is_apostrophe).filter(|p| !p.is_empty()) {
                if self.remove_stopwords && self.stopwords.contains(piece) {
                    continue;
                }
                let surface = if self.stem {
                    porter::stem(piece)
                } else {
                    piece.to_string()
                };
                out.push(Token(surface));
            }
        }
        out
    }
}

fn is_apostrophe(c: char) -> bool {
    matches!(c, '\'' | '\u{2019}')
}

fn strip_possessive(word: &str) -> &str {
    for suffix in ["'s", "\u{2019}s"] {
        if let Some(stripped) = word.strip_suffix(suffix) {
            return stripped;
        }
    }
    word
}
