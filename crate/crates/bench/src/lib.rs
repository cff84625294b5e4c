//! Synthetic workloads for benchmarks.
//!
//! Sizes default to roughly one competition year: a few hundred examples with
//! pools of about 35 paragraphs.

use std::collections::BTreeSet;

use entailrank::{CandidateParagraph, Dataset, QueryExample, Run, ScoredCandidate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[rustfmt::skip]
const VOCAB: &[&str] = &[
    "court", "appeal", "contract", "tribunal", "minister", "applicant", "respondent", "evidence",
    "statute", "section", "decision", "judicial", "review", "refugee", "claim", "officer",
    "immigration", "procedural", "fairness", "hearing", "jurisdiction", "damages", "breach",
    "liability", "negligence", "standard", "reasonable", "error", "law", "fact", "discretion",
    "board", "application", "dismissed", "granted", "counsel", "affidavit", "record", "order",
    "judgment", "trial", "party", "costs", "interest", "property", "crown", "tax", "land",
];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(6..20);
    let words: Vec<&str> = (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect();
    let mut s = words.join(" ");
    s.push('.');
    s[..1].make_ascii_uppercase();
    s
}

fn paragraph(rng: &mut ChaCha8Rng, sentences: usize) -> String {
    (0..sentences)
        .map(|_| sentence(rng))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Labeled dataset with random text and one or two gold paragraphs per example.
pub fn synthetic_dataset(seed: u64, examples: usize, pool: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exs = (0..examples)
        .map(|e| {
            let candidates: Vec<CandidateParagraph> = (0..pool)
                .map(|c| CandidateParagraph {
                    candidate_id: format!("{:03}", c + 1),
                    text: paragraph(&mut rng, 4),
                })
                .collect();
            let k = rng.gen_range(1..=2.min(pool));
            let gold: BTreeSet<String> = candidates
                .choose_multiple(&mut rng, k)
                .map(|c| c.candidate_id.clone())
                .collect();
            QueryExample {
                example_id: format!("{:03}", e + 1),
                fragment_text: paragraph(&mut rng, 2),
                candidates,
                gold: Some(gold),
            }
        })
        .collect();
    Dataset::new("synthetic", exs).expect("generated ids are unique")
}

/// Scores in [0, 1] where gold paragraphs tend to rank higher.
pub fn synthetic_run(seed: u64, dataset: &Dataset) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut run = Run::new("synthetic");
    for ex in dataset.examples() {
        let gold = ex.gold.clone().unwrap_or_default();
        let list = ex
            .candidates
            .iter()
            .map(|c| {
                let boost = if gold.contains(&c.candidate_id) {
                    0.4
                } else {
                    0.0
                };
                let s: f64 = rng.gen::<f64>() * 0.6 + boost;
                ScoredCandidate::new(c.candidate_id.clone(), (s * 1e6).round() / 1e6)
            })
            .collect();
        run.insert(ex.example_id.clone(), list);
    }
    run
}
