//! The `Query: q Document: d Relevant:` input template for seq2seq rerankers.

use crate::error::{Error, Result};

pub const DEFAULT_TOKEN_LIMIT: usize = 512;

/// Whitespace tokens contributed by the fixed markers.
const SCAFFOLD_TOKENS: usize = 3;

/// Byte spans of whitespace-delimited tokens.
pub(crate) fn whitespace_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, text.len()));
    }
    spans
}

/// Renders the reranker input, truncating the document so the whole string
/// holds at most `limit` whitespace tokens. The query is never truncated.
pub fn render_t5_input(query: &str, document: &str, limit: usize) -> Result<String> {
    let query = query.trim();
    let query_tokens = query.split_whitespace().count();
    let fixed = SCAFFOLD_TOKENS + query_tokens;
    if limit < fixed + 1 {
        return Err(Error::InvalidArgument(format!(
            "token limit {limit} cannot hold the template, a {query_tokens}-token query and one document token"
        )));
    }
    let budget = limit - fixed;
    let spans = whitespace_spans(document);
    let doc = match spans.get(budget) {
        // More tokens than the budget: cut right after the last kept token.
        Some(_) => &document[spans[0].0..spans[budget - 1].1],
        None => document.trim(),
    };
    Ok(format!("Query: {query} Document: {doc} Relevant:"))
}
