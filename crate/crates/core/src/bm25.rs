//! Inverted index and Okapi BM25 scoring.
//!
//! Collection statistics (N, df, avgdl) come from everything indexed, which
//! may include windowed auxiliary documents, while scoring is restricted to
//! the candidate pool of each example.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{CandidateParagraph, Dataset, QueryExample};
use crate::error::{Error, Result};
use crate::fsio;
use crate::runs::ScoredCandidate;
use crate::textproc::{window_segments, Analyzer, SentenceSplitter, Token};

pub const DEFAULT_K1: f64 = 0.9;
pub const DEFAULT_B: f64 = 0.4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b)) {
            return Err(Error::InvalidArgument(format!(
                "BM25 parameters out of range: k1={} b={}",
                self.k1, self.b
            )));
        }
        Ok(())
    }
}

/// Index key of a task candidate paragraph.
pub fn candidate_passage_id(example_id: &str, candidate_id: &str) -> String {
    format!("{example_id}/{candidate_id}")
}

/// Index key of one window of an auxiliary document.
pub fn aux_passage_id(doc_id: &str, window: usize) -> String {
    format!("{doc_id}#{window}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Passage {
    pub id: String,
    pub text: String,
}

/// Every candidate paragraph of every dataset, plus auxiliary documents cut
/// into overlapping sentence windows.
pub fn collection_passages(
    datasets: &[&Dataset],
    splitter: &SentenceSplitter,
    window: usize,
    stride: usize,
) -> Result<Vec<Passage>> {
    let mut out = Vec::new();
    for ds in datasets {
        for ex in ds.examples() {
            out.extend(ex.candidates.iter().map(|c| Passage {
                id: candidate_passage_id(&ex.example_id, &c.candidate_id),
                text: c.text.clone(),
            }));
        }
        for doc in ds.aux_documents().unwrap_or_default() {
            let sentences = splitter.segment(&doc.text);
            for (i, text) in window_segments(&sentences, window, stride)?
                .into_iter()
                .enumerate()
            {
                out.push(Passage {
                    id: aux_passage_id(&doc.doc_id, i),
                    text,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    /// term -> (passage ordinal, term frequency), ordinals ascending.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    passage_ids: Vec<String>,
    lookup: HashMap<String, u32>,
    doc_lengths: Vec<u32>,
    avgdl: f64,
    analyzer_fingerprint: String,
}

pub fn build_index(passages: &[Passage], analyzer: &Analyzer) -> Result<Index> {
    if passages.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot index an empty collection".into(),
        ));
    }
    let mut lookup = HashMap::with_capacity(passages.len());
    let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(passages.len());
    for (ord, p) in passages.iter().enumerate() {
        let ord = ord as u32;
        if lookup.insert(p.id.clone(), ord).is_some() {
            return Err(Error::DuplicatePassage(p.id.clone()));
        }
        let tokens = analyzer.analyze(&p.text);
        doc_lengths.push(tokens.len() as u32);
        let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.as_str()).or_default() += 1;
        }
        for (term, count) in tf {
            postings
                .entry(term.to_string())
                .or_default()
                .push((ord, count));
        }
    }
    Index::assemble(
        postings,
        passages.iter().map(|p| p.id.clone()).collect(),
        doc_lengths,
        analyzer.fingerprint().to_string(),
    )
}

impl Index {
    fn assemble(
        postings: BTreeMap<String, Vec<(u32, u32)>>,
        passage_ids: Vec<String>,
        doc_lengths: Vec<u32>,
        analyzer_fingerprint: String,
    ) -> Result<Self> {
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avgdl = total as f64 / doc_lengths.len() as f64;
        let lookup = passage_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Ok(Index {
            postings,
            passage_ids,
            lookup,
            doc_lengths,
            avgdl,
            analyzer_fingerprint,
        })
    }

    /// Number of indexed passages.
    pub fn n(&self) -> usize {
        self.passage_ids.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn term_count(&self) -> usize {
        self.postings.len()
    }

    pub fn analyzer_fingerprint(&self) -> &str {
        &self.analyzer_fingerprint
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn contains(&self, passage_id: &str) -> bool {
        self.lookup.contains_key(passage_id)
    }

    pub fn doc_len(&self, passage_id: &str) -> Option<u32> {
        self.lookup
            .get(passage_id)
            .map(|&o| self.doc_lengths[o as usize])
    }

    pub fn tf(&self, term: &str, passage_id: &str) -> Option<u32> {
        let ord = *self.lookup.get(passage_id)?;
        Some(self.tf_at(term, ord))
    }

    fn tf_at(&self, term: &str, ord: u32) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| {
                list.binary_search_by_key(&ord, |&(o, _)| o)
                    .ok()
                    .map(|i| list[i].1)
            })
            .unwrap_or(0)
    }

    /// ln(1 + (N - df + 0.5) / (df + 0.5))
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.n() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 of a passage against the unique terms of `query`.
    pub fn score(&self, query: &[Token], passage_id: &str, params: &Bm25Params) -> Result<f64> {
        let ord = *self
            .lookup
            .get(passage_id)
            .ok_or_else(|| Error::UnknownPassage(passage_id.to_string()))?;
        let unique: BTreeSet<&str> = query.iter().map(Token::as_str).collect();
        let dl = self.doc_lengths[ord as usize] as f64;
        let norm = params.k1 * (1.0 - params.b + params.b * dl / self.avgdl);
        let mut score = 0.0;
        for term in unique {
            let tf = self.tf_at(term, ord);
            if tf == 0 {
                continue;
            }
            let tf = tf as f64;
            score += self.idf(term) * tf * (params.k1 + 1.0) / (tf + norm);
        }
        Ok(score)
    }
}

pub fn bm25_score(
    index: &Index,
    query: &[Token],
    passage_id: &str,
    params: &Bm25Params,
) -> Result<f64> {
    index.score(query, passage_id, params)
}

const INDEX_FORMAT: &str = "entailrank-index";
const INDEX_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct IndexHeader {
    format: String,
    version: u32,
    analyzer: String,
    passages: usize,
    terms: usize,
}

#[derive(Serialize, Deserialize)]
struct PassageRecord {
    id: String,
    len: u32,
}

#[derive(Serialize, Deserialize)]
struct TermRecord {
    term: String,
    postings: Vec<(u32, u32)>,
}

/// Writes the index as JSON Lines: a header, one line per passage, then one
/// line per term.
pub fn save_index(index: &Index, path: &Path) -> Result<()> {
    let mut out = crate::corpus::to_jsonl([IndexHeader {
        format: INDEX_FORMAT.into(),
        version: INDEX_VERSION,
        analyzer: index.analyzer_fingerprint.clone(),
        passages: index.n(),
        terms: index.term_count(),
    }]);
    out.push_str(&crate::corpus::to_jsonl(
        index
            .passage_ids
            .iter()
            .zip(&index.doc_lengths)
            .map(|(id, &len)| PassageRecord {
                id: id.clone(),
                len,
            }),
    ));
    out.push_str(&crate::corpus::to_jsonl(index.postings.iter().map(
        |(term, postings)| TermRecord {
            term: term.clone(),
            postings: postings.clone(),
        },
    )));
    fsio::write_atomic(path, out.as_bytes())
}

/// Loads an index, refusing one built under a different analyzer configuration.
pub fn load_index(path: &Path, analyzer: &Analyzer) -> Result<Index> {
    let contents = fsio::read_to_string(path)?;
    let mut lines = contents.lines().enumerate();
    let bad = |line: usize, msg: &dyn std::fmt::Display| Error::malformed(path, line, msg);
    let (_, first) = lines.next().ok_or_else(|| bad(1, &"empty index file"))?;
    let header: IndexHeader = serde_json::from_str(first).map_err(|e| bad(1, &e))?;
    if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
        return Err(bad(
            1,
            &format!(
                "unsupported index format {} v{}",
                header.format, header.version
            ),
        ));
    }
    if header.analyzer != analyzer.fingerprint() {
        return Err(Error::AnalyzerMismatch {
            expected: analyzer.fingerprint().to_string(),
            found: header.analyzer,
        });
    }
    if header.passages == 0 {
        return Err(bad(1, &"index holds no passages"));
    }
    let mut ids = Vec::with_capacity(header.passages);
    let mut lengths = Vec::with_capacity(header.passages);
    let mut seen = HashMap::new();
    for _ in 0..header.passages {
        let (i, line) = lines
            .next()
            .ok_or_else(|| bad(0, &"truncated passage table"))?;
        let rec: PassageRecord = serde_json::from_str(line).map_err(|e| bad(i + 1, &e))?;
        if seen.insert(rec.id.clone(), ()).is_some() {
            return Err(Error::DuplicatePassage(rec.id));
        }
        ids.push(rec.id);
        lengths.push(rec.len);
    }
    let mut postings = BTreeMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TermRecord = serde_json::from_str(line).map_err(|e| bad(i + 1, &e))?;
        let ordered = rec.postings.windows(2).all(|w| w[0].0 < w[1].0);
        let in_range = rec
            .postings
            .iter()
            .all(|&(o, tf)| (o as usize) < ids.len() && tf >= 1 && tf <= lengths[o as usize]);
        if rec.postings.is_empty() || !ordered || !in_range {
            return Err(bad(
                i + 1,
                &format!("inconsistent postings for term `{}`", rec.term),
            ));
        }
        postings.insert(rec.term, rec.postings);
    }
    if postings.len() != header.terms {
        return Err(bad(
            1,
            &format!(
                "header declares {} terms, found {}",
                header.terms,
                postings.len()
            ),
        ));
    }
    Index::assemble(postings, ids, lengths, header.analyzer)
}

/// Scores fragments against their candidate pools: each fragment sentence is
/// a separate query and a candidate keeps its best sentence score.
pub struct FragmentScorer<'a> {
    index: &'a Index,
    analyzer: &'a Analyzer,
    splitter: &'a SentenceSplitter,
    params: Bm25Params,
}

impl<'a> FragmentScorer<'a> {
    pub fn new(
        index: &'a Index,
        analyzer: &'a Analyzer,
        splitter: &'a SentenceSplitter,
        params: Bm25Params,
    ) -> Result<Self> {
        params.validate()?;
        if index.analyzer_fingerprint() != analyzer.fingerprint() {
            return Err(Error::AnalyzerMismatch {
                expected: analyzer.fingerprint().to_string(),
                found: index.analyzer_fingerprint().to_string(),
            });
        }
        Ok(FragmentScorer {
            index,
            analyzer,
            splitter,
            params,
        })
    }

    /// Analyzed query terms, one list per fragment sentence.
    pub fn sentence_queries(&self, fragment: &str) -> Vec<Vec<Token>> {
        self.splitter
            .segment(fragment)
            .iter()
            .map(|s| self.analyzer.analyze(&s.text))
            .collect()
    }

    pub fn score_pool(
        &self,
        example_id: &str,
        fragment: &str,
        pool: &[CandidateParagraph],
    ) -> Result<Vec<ScoredCandidate>> {
        let queries = self.sentence_queries(fragment);
        if queries.is_empty() {
            return Err(Error::InvalidDataset(format!(
                "example `{example_id}` has a blank fragment"
            )));
        }
        pool.iter()
            .map(|c| {
                let pid = candidate_passage_id(example_id, &c.candidate_id);
                let mut best = 0.0f64;
                for q in &queries {
                    best = best.max(self.index.score(q, &pid, &self.params)?);
                }
                Ok(ScoredCandidate::new(c.candidate_id.clone(), best))
            })
            .collect()
    }

    pub fn score_fragment(&self, example: &QueryExample) -> Result<Vec<ScoredCandidate>> {
        self.score_pool(
            &example.example_id,
            &example.fragment_text,
            &example.candidates,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizeMode {
    None,
    Max,
}

impl std::str::FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(NormalizeMode::None),
            "max" => Ok(NormalizeMode::Max),
            other => Err(Error::InvalidArgument(format!(
                "unknown normalization `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizeOutcome {
    Unchanged,
    Scaled,
    /// Max mode with a non-positive top score; entries left as they were.
    Degenerate,
}

/// Per-query normalization. `Max` divides by the top score so it becomes 1.0.
pub fn normalize_run(entries: &mut [ScoredCandidate], mode: NormalizeMode) -> NormalizeOutcome {
    match mode {
        NormalizeMode::None => NormalizeOutcome::Unchanged,
        NormalizeMode::Max => {
            let top = entries
                .iter()
                .map(|e| e.score)
                .fold(f64::NEG_INFINITY, f64::max);
            // Also catches NaN and the empty list (top = -inf).
            if top.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                log::warn!("max normalization skipped: top score {top} is not positive");
                return NormalizeOutcome::Degenerate;
            }
            for e in entries.iter_mut() {
                e.score /= top;
            }
            NormalizeOutcome::Scaled
        }
    }
}
