//! Positive-example augmentation and balanced pair sampling for training a
//! pairwise entailment classifier.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::template::whitespace_spans;
use crate::corpus::{BaseParagraph, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_SAMPLE_SIZE: usize = 20_000;

/// A window of the base-case paragraph standing in for the original fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtificialFragment {
    pub source_example_id: String,
    pub window_index: usize,
    pub text: String,
    pub labels: BTreeSet<String>,
}

/// Slides a window as long as the fragment (in whitespace tokens) over the
/// base paragraph with stride `max(1, len/2)`. Every window inherits `gold`.
///
/// Windows start at 0, s, 2s, ...; the last one is clipped to the paragraph
/// and generation stops once a window reaches the paragraph end.
pub fn make_artificial_fragments(
    example_id: &str,
    base_paragraph: &str,
    fragment: &str,
    gold: &BTreeSet<String>,
) -> Result<Vec<ArtificialFragment>> {
    let fragment_len = fragment.split_whitespace().count();
    if fragment_len == 0 {
        return Err(Error::InvalidArgument(format!(
            "example `{example_id}`: empty fragment"
        )));
    }
    let spans = whitespace_spans(base_paragraph);
    if spans.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "example `{example_id}`: empty base paragraph"
        )));
    }
    let stride = (fragment_len / 2).max(1);
    let mut out = Vec::new();
    let mut offset = 0;
    while offset < spans.len() {
        let end = (offset + fragment_len).min(spans.len());
        out.push(ArtificialFragment {
            source_example_id: example_id.to_string(),
            window_index: out.len(),
            text: base_paragraph[spans[offset].0..spans[end - 1].1].to_string(),
            labels: gold.clone(),
        });
        if end == spans.len() {
            break;
        }
        offset += stride;
    }
    Ok(out)
}

/// A (fragment, candidate) training pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub example_id: String,
    pub fragment: String,
    pub candidate_id: String,
    pub candidate_text: String,
    pub label: bool,
}

/// Draws `n/2` positives and `n/2` negatives without replacement, then
/// shuffles them together. Same seed, same output.
pub fn balanced_sample(pairs: &[LabeledPair], n: usize, seed: u64) -> Result<Vec<LabeledPair>> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "sample size must be a positive even number, got {n}"
        )));
    }
    let half = n / 2;
    let (pos, neg): (Vec<&LabeledPair>, Vec<&LabeledPair>) = pairs.iter().partition(|p| p.label);
    for (kind, pool) in [("positive", &pos), ("negative", &neg)] {
        if pool.len() < half {
            return Err(Error::InsufficientPairs {
                kind,
                needed: half,
                available: pool.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<LabeledPair> = Vec::with_capacity(n);
    for pool in [&pos, &neg] {
        let mut picks = index::sample(&mut rng, pool.len(), half).into_vec();
        picks.sort_unstable();
        out.extend(picks.into_iter().map(|i| pool[i].clone()));
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Every (fragment, candidate) pair of a labeled dataset. Each example
/// contributes its original fragment plus, when `base` holds its base-case
/// paragraph, every artificial fragment cut from that paragraph; all of them
/// carry the example's gold labels. Base paragraphs of examples outside the
/// dataset are ignored, so one base file can serve every split.
pub fn training_pairs(dataset: &Dataset, base: &[BaseParagraph]) -> Result<Vec<LabeledPair>> {
    dataset.require_labeled()?;
    let base_of: BTreeMap<&str, &str> = base
        .iter()
        .map(|b| (b.example_id.as_str(), b.paragraph.as_str()))
        .collect();
    let ignored = base_of
        .keys()
        .filter(|id| dataset.get(id).is_none())
        .count();
    if ignored > 0 {
        log::info!("{ignored} base paragraph(s) belong to examples outside the dataset");
    }
    let mut out = Vec::new();
    for ex in dataset.examples() {
        let gold = ex.gold.as_ref().expect("labeled");
        let mut fragments = vec![ex.fragment_text.clone()];
        if let Some(paragraph) = base_of.get(ex.example_id.as_str()) {
            let windows =
                make_artificial_fragments(&ex.example_id, paragraph, &ex.fragment_text, gold)?;
            fragments.extend(windows.into_iter().map(|w| w.text));
        }
        for fragment in &fragments {
            out.extend(ex.candidates.iter().map(|c| LabeledPair {
                example_id: ex.example_id.clone(),
                fragment: fragment.clone(),
                candidate_id: c.candidate_id.clone(),
                candidate_text: c.text.clone(),
                label: gold.contains(&c.candidate_id),
            }));
        }
    }
    Ok(out)
}
