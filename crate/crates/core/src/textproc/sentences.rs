//! Rule-based sentence segmentation.
//!
//! A boundary is a run of `.`, `!` or `?` (plus closing quotes/brackets)
//! followed by whitespace and then an uppercase letter or digit, optionally
//! behind an opening quote or bracket. A `.` that ends a guarded
//! abbreviation (`v.`, `R.`, `No.`, `para.` ...) never closes a sentence.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::analyzer::parse_word_list;
use crate::error::Result;
use crate::fsio;

const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: usize,
    pub text: String,
    /// Byte offsets `[start, end)` into the source text.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: BTreeSet<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter {
            abbreviations: parse_word_list(DEFAULT_ABBREVIATIONS),
        }
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_opener(c: char) -> bool {
    matches!(c, '"' | '\'' | '(' | '[' | '\u{201c}' | '\u{2018}')
}

impl SentenceSplitter {
    pub fn with_abbreviations(abbreviations: impl IntoIterator<Item = String>) -> Self {
        SentenceSplitter {
            abbreviations: abbreviations
                .into_iter()
                .map(|a| a.to_lowercase())
                .collect(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let contents = fsio::read_to_string(path)?;
        Ok(SentenceSplitter {
            abbreviations: parse_word_list(&contents),
        })
    }

    pub fn segment(&self, text: &str) -> Vec<Sentence> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start: Option<usize> = None;
        let mut i = 0;
        while i < chars.len() {
            let (pos, c) = chars[i];
            if start.is_none() {
                if c.is_whitespace() {
                    i += 1;
                    continue;
                }
                start = Some(pos);
            }
            if !is_terminator(c) {
                i += 1;
                continue;
            }
            // Extend over the whole terminator/closer cluster.
            let mut j = i + 1;
            while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
                j += 1;
            }
            let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
            if self.is_boundary(text, &chars, i, j) {
                let s = start.take().expect("sentence start");
                push(&mut sentences, text, s, end);
            }
            i = j;
        }
        if let Some(s) = start {
            let end = s + text[s..].trim_end().len();
            push(&mut sentences, text, s, end);
        }
        sentences
    }

    /// `term` is the index of the first terminator, `after` the index just past the cluster.
    fn is_boundary(&self, text: &str, chars: &[(usize, char)], term: usize, after: usize) -> bool {
        if after < chars.len() {
            if !chars[after].1.is_whitespace() {
                return false;
            }
            let mut k = after;
            while k < chars.len() && chars[k].1.is_whitespace() {
                k += 1;
            }
            while k < chars.len() && is_opener(chars[k].1) {
                k += 1;
            }
            match chars.get(k) {
                Some(&(_, c)) if c.is_uppercase() || c.is_ascii_digit() => {}
                // Trailing whitespace or openers only: the text ends here.
                None => {}
                Some(_) => return false,
            }
        }
        if chars[term].1 == '.' && self.is_guarded(text, chars[term].0) {
            return false;
        }
        true
    }

    fn is_guarded(&self, text: &str, dot: usize) -> bool {
        let head = &text[..dot];
        let word_start = head.rfind(char::is_whitespace).map_or(0, |p| {
            p + head[p..].chars().next().map_or(1, char::len_utf8)
        });
        let word = head[word_start..].trim_start_matches(is_opener);
        if word.is_empty() {
            return false;
        }
        let candidate = format!("{}.", word.to_lowercase());
        self.abbreviations.contains(&candidate)
    }
}

fn push(sentences: &mut Vec<Sentence>, text: &str, start: usize, end: usize) {
    sentences.push(Sentence {
        index: sentences.len(),
        text: text[start..end].to_string(),
        char_span: (start, end),
    });
}

pub fn segment_sentences(text: &str) -> Vec<Sentence> {
    SentenceSplitter::default().segment(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(text: &str) -> Vec<String> {
        segment_sentences(text)
            .into_iter()
            .map(|s| s.text)
            .collect()
    }

    #[test]
    fn two_plain_sentences() {
        assert_eq!(
            texts("First sentence. Second sentence."),
            ["First sentence.", "Second sentence."]
        );
    }

    #[test]
    fn blank_input() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("  \n\t ").is_empty());
    }

    #[test]
    fn legal_abbreviations_do_not_split() {
        assert_eq!(
            texts("The appellant cited R. v. Smith. The court agreed."),
            ["The appellant cited R. v. Smith.", "The court agreed."]
        );
        assert_eq!(
            texts("See para. 12 of the reasons. It is binding."),
            ["See para. 12 of the reasons.", "It is binding."]
        );
        assert_eq!(
            texts("Docket No. 4411 was heard. Leave was granted."),
            ["Docket No. 4411 was heard.", "Leave was granted."]
        );
    }

    #[test]
    fn lowercase_continuation_is_not_a_boundary() {
        assert_eq!(
            texts("It cost 3.5 million. e.g. this one"),
            ["It cost 3.5 million. e.g. this one"]
        );
    }

    #[test]
    fn quotes_and_questions() {
        assert_eq!(
            texts("He asked \"why?\" Then he left! (Nobody followed.) 2 days passed"),
            [
                "He asked \"why?\"",
                "Then he left!",
                "(Nobody followed.)",
                "2 days passed"
            ]
        );
    }

    #[test]
    fn spans_index_into_source() {
        let src = "  Alpha beta.  Gamma!\n";
        let sents = segment_sentences(src);
        assert_eq!(sents.len(), 2);
        for (i, s) in sents.iter().enumerate() {
            assert_eq!(s.index, i);
            assert_eq!(&src[s.char_span.0..s.char_span.1], s.text);
        }
        assert_eq!(sents[1].text, "Gamma!");
    }

    #[test]
    fn custom_guard_list() {
        let splitter = SentenceSplitter::with_abbreviations(Vec::new());
        let n = splitter
            .segment("The appellant cited R. v. Smith. The court agreed.")
            .len();
        assert_eq!(n, 3);
    }
}
