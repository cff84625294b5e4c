//! Scored runs, the request boundary for external rerankers, and the
//! two-logit relevance probability.
//!
//! Run files use the standard six-column layout
//! `example_id Q0 candidate_id rank score tag`, sorted per example by
//! descending score (ties by candidate id), scores printed with 6 decimals.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{to_jsonl, Dataset};
use crate::error::{Error, Result};
use crate::fsio;
use crate::textproc::render_t5_input;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub candidate_id: String,
    pub score: f64,
}

impl ScoredCandidate {
    pub fn new(candidate_id: impl Into<String>, score: f64) -> Self {
        ScoredCandidate {
            candidate_id: candidate_id.into(),
            score,
        }
    }
}

/// Descending score, then ascending candidate id.
pub fn rank_order(a: &ScoredCandidate, b: &ScoredCandidate) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.candidate_id.cmp(&b.candidate_id))
}

/// Per-example scored candidates from one scorer.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub tag: String,
    pub entries: BTreeMap<String, Vec<ScoredCandidate>>,
}

impl Run {
    pub fn new(tag: impl Into<String>) -> Self {
        Run {
            tag: tag.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, example_id: impl Into<String>, scored: Vec<ScoredCandidate>) {
        self.entries.insert(example_id.into(), scored);
    }

    pub fn get(&self, example_id: &str) -> Option<&[ScoredCandidate]> {
        self.entries.get(example_id).map(Vec::as_slice)
    }

    /// Every entry sorted by `rank_order`.
    pub fn sorted(&self) -> Run {
        let mut out = self.clone();
        for list in out.entries.values_mut() {
            list.sort_by(rank_order);
        }
        out
    }
}

/// exp(lt) / (exp(lt) + exp(lf)), evaluated as a logistic of the difference.
pub fn true_prob(logit_true: f64, logit_false: f64) -> Result<f64> {
    if !logit_true.is_finite() || !logit_false.is_finite() {
        return Err(Error::NonFinite(format!(
            "logits ({logit_true}, {logit_false})"
        )));
    }
    let d = logit_true - logit_false;
    Ok(if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringRequest {
    pub example_id: String,
    pub candidate_id: String,
    pub input_text: String,
}

/// One request per (example, candidate) pair, in dataset order.
pub fn scoring_requests(dataset: &Dataset, limit: usize) -> Result<Vec<ScoringRequest>> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut out = Vec::new();
    for ex in dataset.examples() {
        for c in &ex.candidates {
            out.push(ScoringRequest {
                example_id: ex.example_id.clone(),
                candidate_id: c.candidate_id.clone(),
                input_text: render_t5_input(&ex.fragment_text, &c.text, limit)?,
            });
        }
    }
    Ok(out)
}

pub fn write_scoring_requests(dataset: &Dataset, limit: usize, path: &Path) -> Result<usize> {
    let requests = scoring_requests(dataset, limit)?;
    fsio::write_atomic(path, to_jsonl(&requests).as_bytes())?;
    Ok(requests.len())
}

fn check_field(value: &str, what: &str) -> Result<()> {
    if value.is_empty() || value.chars().any(char::is_whitespace) {
        return Err(Error::InvalidDataset(format!(
            "{what} `{value}` cannot be written to a run file (empty or contains whitespace)"
        )));
    }
    Ok(())
}

/// Canonical run text. Examples with no entries produce no lines; the tag
/// is only checked when at least one line is written.
pub fn format_run(run: &Run) -> Result<String> {
    if run.entries.values().any(|l| !l.is_empty()) {
        check_field(&run.tag, "run tag")?;
    }
    let mut out = String::new();
    for (example_id, list) in &run.entries {
        check_field(example_id, "example id")?;
        let mut sorted = list.clone();
        sorted.sort_by(rank_order);
        let mut seen = HashSet::new();
        for (rank, sc) in sorted.iter().enumerate() {
            check_field(&sc.candidate_id, "candidate id")?;
            if !sc.score.is_finite() {
                return Err(Error::NonFinite(format!(
                    "score of {example_id}/{}",
                    sc.candidate_id
                )));
            }
            if !seen.insert(sc.candidate_id.as_str()) {
                return Err(Error::DuplicateCandidate {
                    example_id: example_id.clone(),
                    candidate_id: sc.candidate_id.clone(),
                });
            }
            let _ = writeln!(
                out,
                "{example_id} Q0 {} {} {:.6} {}",
                sc.candidate_id,
                rank + 1,
                sc.score,
                run.tag
            );
        }
    }
    Ok(out)
}

pub fn write_run(run: &Run, path: &Path) -> Result<()> {
    fsio::write_atomic(path, format_run(run)?.as_bytes())
}

/// Parses run text; `origin` names the source in errors. Ranks are ignored
/// and recomputed from scores.
pub fn parse_run(text: &str, origin: &Path) -> Result<Run> {
    let mut run = Run::default();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [example_id, _q0, candidate_id, rank, score, tag] = cols[..] else {
            return Err(Error::malformed(
                origin,
                lineno,
                format!("expected 6 columns, found {}", cols.len()),
            ));
        };
        rank.parse::<u64>()
            .map_err(|_| Error::malformed(origin, lineno, format!("bad rank `{rank}`")))?;
        let score: f64 = score
            .parse()
            .map_err(|_| Error::malformed(origin, lineno, format!("bad score `{score}`")))?;
        if !score.is_finite() {
            return Err(Error::malformed(
                origin,
                lineno,
                format!("non-finite score `{score}`"),
            ));
        }
        if !seen.insert((example_id.to_string(), candidate_id.to_string())) {
            return Err(Error::malformed(
                origin,
                lineno,
                format!("duplicate entry {example_id}/{candidate_id}"),
            ));
        }
        if run.tag.is_empty() {
            run.tag = tag.to_string();
        }
        run.entries
            .entry(example_id.to_string())
            .or_default()
            .push(ScoredCandidate::new(candidate_id, score));
    }
    Ok(run.sorted())
}

pub fn read_run(path: &Path) -> Result<Run> {
    parse_run(&fsio::read_to_string(path)?, path)
}

/// Reads `example_id candidate_id logit_true logit_false` lines and converts
/// each pair of logits with [`true_prob`].
pub fn read_logits(path: &Path, tag: &str) -> Result<Run> {
    let text = fsio::read_to_string(path)?;
    let mut run = Run::new(tag);
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [example_id, candidate_id, lt, lf] = cols[..] else {
            return Err(Error::malformed(
                path,
                i + 1,
                format!("expected 4 columns, found {}", cols.len()),
            ));
        };
        let parse = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::malformed(path, i + 1, format!("bad logit `{s}`")))
        };
        let p = true_prob(parse(lt)?, parse(lf)?).map_err(|e| Error::malformed(path, i + 1, e))?;
        if !seen.insert((example_id.to_string(), candidate_id.to_string())) {
            return Err(Error::malformed(
                path,
                i + 1,
                format!("duplicate entry {example_id}/{candidate_id}"),
            ));
        }
        run.entries
            .entry(example_id.to_string())
            .or_default()
            .push(ScoredCandidate::new(candidate_id, p));
    }
    Ok(run.sorted())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    UnknownExample {
        example_id: String,
    },
    MissingExample {
        example_id: String,
    },
    UnknownCandidate {
        example_id: String,
        candidate_id: String,
    },
    DuplicateCandidate {
        example_id: String,
        candidate_id: String,
    },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::UnknownExample { example_id } => {
                write!(f, "run cites unknown example {example_id}")
            }
            Finding::MissingExample { example_id } => {
                write!(f, "example {example_id} missing from run")
            }
            Finding::UnknownCandidate {
                example_id,
                candidate_id,
            } => write!(
                f,
                "{example_id}: candidate {candidate_id} is outside the pool"
            ),
            Finding::DuplicateCandidate {
                example_id,
                candidate_id,
            } => write!(
                f,
                "{example_id}: candidate {candidate_id} appears more than once"
            ),
        }
    }
}

/// Checks a run against a dataset. Report-only; never fails.
pub fn validate_run(run: &Run, dataset: &Dataset) -> Vec<Finding> {
    let pools = dataset.by_id();
    let mut findings = Vec::new();
    for (example_id, list) in &run.entries {
        let Some(ex) = pools.get(example_id.as_str()) else {
            findings.push(Finding::UnknownExample {
                example_id: example_id.clone(),
            });
            continue;
        };
        let pool: HashSet<&str> = ex
            .candidates
            .iter()
            .map(|c| c.candidate_id.as_str())
            .collect();
        let mut seen = BTreeSet::new();
        for sc in list {
            if !seen.insert(sc.candidate_id.as_str()) {
                findings.push(Finding::DuplicateCandidate {
                    example_id: example_id.clone(),
                    candidate_id: sc.candidate_id.clone(),
                });
            } else if !pool.contains(sc.candidate_id.as_str()) {
                findings.push(Finding::UnknownCandidate {
                    example_id: example_id.clone(),
                    candidate_id: sc.candidate_id.clone(),
                });
            }
        }
    }
    for ex in dataset.examples() {
        if !run.entries.contains_key(&ex.example_id) {
            findings.push(Finding::MissingExample {
                example_id: ex.example_id.clone(),
            });
        }
    }
    findings
}
