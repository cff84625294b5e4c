//! Overlapping sentence windows for splitting long documents into passages.

use std::ops::Range;

use super::sentences::Sentence;
use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_STRIDE: usize = 5;

/// Window ranges over `n` items starting at 0, stride, 2·stride, ...
///
/// Each window is clipped to `n`; a window whose range falls inside the
/// previously emitted one is dropped, so emission stops once a window
/// reaches the end.
pub fn window_ranges(n: usize, window: usize, stride: usize) -> Result<Vec<Range<usize>>> {
    if window == 0 || stride == 0 || stride > window {
        return Err(Error::InvalidArgument(format!(
            "window/stride must satisfy window >= 1 and 1 <= stride <= window (got {window}/{stride})"
        )));
    }
    let mut out: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + window).min(n);
        if out.last().is_some_and(|prev| end <= prev.end) {
            break;
        }
        out.push(start..end);
        if end == n {
            break;
        }
        start += stride;
    }
    Ok(out)
}

/// Joins each window of sentences into one passage, sentences separated by a space.
pub fn window_segments(
    sentences: &[Sentence],
    window: usize,
    stride: usize,
) -> Result<Vec<String>> {
    Ok(window_ranges(sentences.len(), window, stride)?
        .into_iter()
        .map(|r| {
            sentences[r]
                .iter()
                .map(|s| s.text.as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect())
}
