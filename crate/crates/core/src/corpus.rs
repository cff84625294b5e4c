//! Dataset model and ingestion of case-entailment data.
//!
//! The canonical on-disk form is JSON Lines, one example per line:
//!
//! ```text
//! {"example_id":"001","fragment":"...","candidates":[{"candidate_id":"001","text":"..."}],"gold":["001"]}
//! ```
//!
//! `gold` is omitted for unlabeled (test) data. An empty `gold` list means
//! "labeled, no positives", which is distinct.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;
use crate::textproc::Analyzer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateParagraph {
    pub candidate_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryExample {
    pub example_id: String,
    #[serde(rename = "fragment")]
    pub fragment_text: String,
    pub candidates: Vec<CandidateParagraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<BTreeSet<String>>,
}

impl QueryExample {
    pub fn is_labeled(&self) -> bool {
        self.gold.is_some()
    }

    pub fn candidate(&self, candidate_id: &str) -> Option<&CandidateParagraph> {
        self.candidates
            .iter()
            .find(|c| c.candidate_id == candidate_id)
    }

    fn validate(&self) -> Result<()> {
        if self.example_id.trim().is_empty() {
            return Err(Error::InvalidDataset("empty example id".into()));
        }
        if self.candidates.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "example `{}` has no candidates",
                self.example_id
            )));
        }
        let mut seen = HashSet::new();
        for c in &self.candidates {
            if c.candidate_id.trim().is_empty() {
                return Err(Error::InvalidDataset(format!(
                    "example `{}` has an empty candidate id",
                    self.example_id
                )));
            }
            if c.text.trim().is_empty() {
                return Err(Error::InvalidDataset(format!(
                    "example `{}`: candidate `{}` has blank text",
                    self.example_id, c.candidate_id
                )));
            }
            if !seen.insert(c.candidate_id.as_str()) {
                return Err(Error::DuplicateCandidate {
                    example_id: self.example_id.clone(),
                    candidate_id: c.candidate_id.clone(),
                });
            }
        }
        if let Some(gold) = &self.gold {
            if let Some(missing) = gold.iter().find(|g| !seen.contains(g.as_str())) {
                return Err(Error::GoldNotInPool {
                    example_id: self.example_id.clone(),
                    candidate_id: missing.clone(),
                });
            }
        }
        Ok(())
    }
}

/// A long document used only for index statistics; never labeled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuxDocument {
    pub doc_id: String,
    pub text: String,
}

/// Immutable, validated collection of examples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    split_name: String,
    examples: Vec<QueryExample>,
    aux_documents: Option<Vec<AuxDocument>>,
}

impl Dataset {
    pub fn new(split_name: impl Into<String>, examples: Vec<QueryExample>) -> Result<Self> {
        let mut seen = HashSet::new();
        for ex in &examples {
            ex.validate()?;
            if !seen.insert(ex.example_id.as_str()) {
                return Err(Error::DuplicateExample(ex.example_id.clone()));
            }
        }
        Ok(Dataset {
            split_name: split_name.into(),
            examples,
            aux_documents: None,
        })
    }

    pub fn with_aux_documents(mut self, docs: Vec<AuxDocument>) -> Self {
        self.aux_documents = Some(docs);
        self
    }

    pub fn split_name(&self) -> &str {
        &self.split_name
    }

    pub fn examples(&self) -> &[QueryExample] {
        &self.examples
    }

    pub fn aux_documents(&self) -> Option<&[AuxDocument]> {
        self.aux_documents.as_deref()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn get(&self, example_id: &str) -> Option<&QueryExample> {
        self.examples.iter().find(|e| e.example_id == example_id)
    }

    /// Map from example id to example, for repeated lookups.
    pub fn by_id(&self) -> BTreeMap<&str, &QueryExample> {
        self.examples
            .iter()
            .map(|e| (e.example_id.as_str(), e))
            .collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.examples.iter().all(QueryExample::is_labeled)
    }

    /// Errors with the first unlabeled example, if any.
    pub fn require_labeled(&self) -> Result<()> {
        match self.examples.iter().find(|e| !e.is_labeled()) {
            Some(e) => Err(Error::Unlabeled(e.example_id.clone())),
            None => Ok(()),
        }
    }
}

fn split_name_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn parse_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let contents = fsio::read_to_string(path)?;
    contents
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::malformed(path, i + 1, e)))
        .collect()
}

pub(crate) fn to_jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&r).expect("serializable record"));
        out.push('\n');
    }
    out
}

/// Loads a canonical JSON Lines dataset; the split name is the file stem.
pub fn load_canonical(path: &Path) -> Result<Dataset> {
    Dataset::new(split_name_of(path), parse_jsonl(path)?)
}

pub fn write_canonical(dataset: &Dataset, path: &Path) -> Result<()> {
    fsio::write_atomic(path, to_jsonl(dataset.examples()).as_bytes())
}

/// Writes one JSON record per line, atomically.
pub fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<()> {
    fsio::write_atomic(path, to_jsonl(records).as_bytes())
}

/// The base-case paragraph that contains an example's fragment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseParagraph {
    pub example_id: String,
    pub paragraph: String,
}

/// Loads `{"example_id": ..., "paragraph": ...}` records, at most one per example.
pub fn load_base_paragraphs(path: &Path) -> Result<Vec<BaseParagraph>> {
    let records: Vec<BaseParagraph> = parse_jsonl(path)?;
    let mut seen = HashSet::new();
    for r in &records {
        if !seen.insert(r.example_id.as_str()) {
            return Err(Error::DuplicateExample(r.example_id.clone()));
        }
    }
    Ok(records)
}

/// Loads `{"doc_id": ..., "text": ...}` records.
pub fn load_aux_documents(path: &Path) -> Result<Vec<AuxDocument>> {
    let docs: Vec<AuxDocument> = parse_jsonl(path)?;
    let mut seen = HashSet::new();
    for d in &docs {
        if !seen.insert(d.doc_id.as_str()) {
            return Err(Error::DuplicatePassage(d.doc_id.clone()));
        }
    }
    Ok(docs)
}

pub const FRAGMENT_FILE: &str = "entailed_fragment.txt";
pub const PARAGRAPHS_DIR: &str = "paragraphs";
pub const LABELS_FILE: &str = "labels.json";

/// Numeric-aware ordering so `2` sorts before `10`; falls back to text.
fn natural_key(s: &str) -> (u64, String) {
    (s.parse().unwrap_or(u64::MAX), s.to_string())
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by_key(|p| {
        natural_key(
            &p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        )
    });
    Ok(entries)
}

/// Loads the competition's directory layout:
/// `<root>/<example_id>/entailed_fragment.txt`,
/// `<root>/<example_id>/paragraphs/<nnn>.txt` and an optional
/// `<root>/labels.json` mapping example ids to paragraph file stems.
pub fn load_coliee_layout(root: &Path) -> Result<Dataset> {
    let labels = load_labels(&root.join(LABELS_FILE))?;
    let mut examples = Vec::new();
    for dir in read_dir_sorted(root)? {
        if !dir.is_dir() {
            continue;
        }
        let example_id = dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        let fragment_path = dir.join(FRAGMENT_FILE);
        if !fragment_path.is_file() {
            return Err(Error::MissingFragment(fragment_path));
        }
        let fragment_text = fsio::read_to_string(&fragment_path)?.trim().to_string();
        let para_dir = dir.join(PARAGRAPHS_DIR);
        let mut candidates = Vec::new();
        if para_dir.is_dir() {
            for file in read_dir_sorted(&para_dir)? {
                if !file.is_file() || file.extension().is_none_or(|e| e != "txt") {
                    continue;
                }
                candidates.push(CandidateParagraph {
                    candidate_id: split_name_of(&file),
                    text: fsio::read_to_string(&file)?.trim().to_string(),
                });
            }
        }
        if candidates.is_empty() {
            return Err(Error::EmptyParagraphs(para_dir));
        }
        let gold = labels
            .as_ref()
            .map(|l| l.get(&example_id).cloned().unwrap_or_default());
        examples.push(QueryExample {
            example_id,
            fragment_text,
            candidates,
            gold,
        });
    }
    if let Some(labels) = &labels {
        let known: HashSet<&str> = examples.iter().map(|e| e.example_id.as_str()).collect();
        if let Some(unknown) = labels.keys().find(|k| !known.contains(k.as_str())) {
            return Err(Error::UnknownLabelExample(unknown.clone()));
        }
    }
    Dataset::new(split_name_of(root), examples)
}

fn load_labels(path: &Path) -> Result<Option<BTreeMap<String, BTreeSet<String>>>> {
    if !path.exists() {
        return Ok(None);
    }
    let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(&fsio::read_to_string(path)?)
        .map_err(|e| Error::malformed(path, e.line(), e))?;
    Ok(Some(
        raw.into_iter()
            .map(|(k, v)| {
                let stems = v
                    .into_iter()
                    .map(|s| s.strip_suffix(".txt").map(str::to_string).unwrap_or(s))
                    .collect();
                (k, stems)
            })
            .collect(),
    ))
}

/// Seeded shuffle-and-cut split by example. The first part receives
/// `round(ratio * N)` examples; both parts keep the input order.
pub fn split_train_dev(dataset: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split ratio must be in (0, 1), got {ratio}"
        )));
    }
    dataset.require_labeled()?;
    let n = dataset.len();
    let first = (ratio * n as f64).round() as usize;
    if first == 0 || first == n {
        return Err(Error::InvalidArgument(format!(
            "ratio {ratio} over {n} examples leaves one part empty"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut in_first = vec![false; n];
    for &i in &order[..first] {
        in_first[i] = true;
    }
    let (a, b): (Vec<_>, Vec<_>) = dataset
        .examples()
        .iter()
        .cloned()
        .zip(in_first)
        .partition(|(_, first)| *first);
    let name = dataset.split_name();
    Ok((
        Dataset::new(
            format!("{name}-train"),
            a.into_iter().map(|(e, _)| e).collect(),
        )?,
        Dataset::new(
            format!("{name}-dev"),
            b.into_iter().map(|(e, _)| e).collect(),
        )?,
    ))
}

/// How `dataset_stats` counts tokens.
#[derive(Debug, Clone, Copy)]
pub enum TokenCount<'a> {
    Whitespace,
    Analyzed(&'a Analyzer),
}

impl TokenCount<'_> {
    fn count(&self, text: &str) -> usize {
        match self {
            TokenCount::Whitespace => text.split_whitespace().count(),
            TokenCount::Analyzed(a) => a.analyze(text).len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub example_count: usize,
    pub labeled_count: usize,
    pub avg_candidates: f64,
    /// Averaged over labeled examples only; 0 when none are labeled.
    pub avg_positives: f64,
    pub avg_fragment_tokens: f64,
    pub avg_candidate_tokens: f64,
}

pub fn dataset_stats(dataset: &Dataset, tokens: TokenCount<'_>) -> Result<StatsReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.len() as f64;
    let mut candidates = 0usize;
    let mut positives = 0usize;
    let mut labeled = 0usize;
    let mut fragment_tokens = 0usize;
    let mut candidate_tokens = 0usize;
    for ex in dataset.examples() {
        candidates += ex.candidates.len();
        if let Some(g) = &ex.gold {
            labeled += 1;
            positives += g.len();
        }
        fragment_tokens += tokens.count(&ex.fragment_text);
        candidate_tokens += ex
            .candidates
            .iter()
            .map(|c| tokens.count(&c.text))
            .sum::<usize>();
    }
    Ok(StatsReport {
        example_count: dataset.len(),
        labeled_count: labeled,
        avg_candidates: candidates as f64 / n,
        avg_positives: if labeled == 0 {
            0.0
        } else {
            positives as f64 / labeled as f64
        },
        avg_fragment_tokens: fragment_tokens as f64 / n,
        avg_candidate_tokens: candidate_tokens as f64 / candidates as f64,
    })
}
