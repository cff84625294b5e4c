//! Answer selection, exhaustive grid tuning and selection-level ensembles.
//!
//! A candidate is selected when all three rules admit it:
//!
//! * its score is strictly above `alpha`;
//! * it is among the top `beta` candidates (score descending, id ascending);
//! * its score is at least `gamma` times the top score. When the top score
//!   is not positive, only candidates tied with it pass this rule.
//!
//! `(0, 1, 0)` therefore reduces to picking the single best candidate.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{to_jsonl, Dataset};
use crate::error::{Error, Result};
use crate::fsio;
use crate::metrics::{EvalReport, Predictions};
use crate::runs::{rank_order, Run, ScoredCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub alpha: f64,
    pub beta: usize,
    pub gamma: f64,
}

impl SelectionParams {
    pub const NO_RULE: SelectionParams = SelectionParams {
        alpha: 0.0,
        beta: 1,
        gamma: 0.0,
    };

    pub fn new(alpha: f64, beta: usize, gamma: f64) -> Result<Self> {
        let p = SelectionParams { alpha, beta, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if self.beta == 0 {
            return Err(Error::InvalidArgument("beta must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be in [0, 1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SelectionParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, {}, {}", self.alpha, self.beta, self.gamma)
    }
}

/// Parses `"alpha,beta,gamma"`.
impl FromStr for SelectionParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::InvalidArgument(format!("expected `alpha,beta,gamma`, got `{s}`"));
        let [a, b, g] = parts[..] else {
            return Err(bad());
        };
        SelectionParams::new(
            a.parse().map_err(|_| bad())?,
            b.parse().map_err(|_| bad())?,
            g.parse().map_err(|_| bad())?,
        )
    }
}

/// Selects from `scored` under `params`. The result keeps rank order.
pub fn select_answers(
    scored: &[ScoredCandidate],
    params: &SelectionParams,
) -> Result<Vec<ScoredCandidate>> {
    if scored.is_empty() {
        return Err(Error::EmptyScores(String::new()));
    }
    let mut ranked = scored.to_vec();
    ranked.sort_by(rank_order);
    Ok(select_ranked(&ranked, params).to_vec())
}

/// `ranked` must already be in `rank_order`. Because the three rules are
/// all monotone in rank, the selection is a prefix of the ranking.
fn select_ranked<'a>(
    ranked: &'a [ScoredCandidate],
    params: &SelectionParams,
) -> &'a [ScoredCandidate] {
    let Some(top) = ranked.first().map(|c| c.score) else {
        return &[];
    };
    let floor = params.gamma * top;
    let keep = ranked
        .iter()
        .take(params.beta)
        .take_while(|c| {
            c.score > params.alpha
                && if top > 0.0 {
                    c.score >= floor
                } else {
                    c.score == top
                }
        })
        .count();
    &ranked[..keep]
}

/// Chosen candidates, with their scores, per example.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub answers: BTreeMap<String, Vec<ScoredCandidate>>,
}

impl Selection {
    pub fn predictions(&self) -> Predictions {
        self.answers
            .iter()
            .map(|(e, list)| {
                (
                    e.clone(),
                    list.iter().map(|c| c.candidate_id.clone()).collect(),
                )
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

/// Applies `params` to every example of the run. Examples with no scored
/// candidates get an empty answer set.
pub fn apply_selection(run: &Run, params: &SelectionParams) -> Selection {
    Selection {
        answers: run
            .entries
            .iter()
            .map(|(e, list)| {
                let mut ranked = list.clone();
                ranked.sort_by(rank_order);
                (e.clone(), select_ranked(&ranked, params).to_vec())
            })
            .collect(),
    }
}

/// Candidate values for each selection parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    alphas: Vec<f64>,
    betas: Vec<usize>,
    gammas: Vec<f64>,
}

fn tenths() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

impl Default for ParamGrid {
    /// alpha in {0, 0.1, ..., 0.9}; beta in {1..10};
    /// gamma in {0, 0.1, ..., 0.9, 0.95, 0.99, 0.995, 0.999, 0.9995, 0.9999}.
    fn default() -> Self {
        let mut gammas = tenths();
        gammas.extend([0.95, 0.99, 0.995, 0.999, 0.9995, 0.9999]);
        ParamGrid::new(tenths(), (1..=10).collect(), gammas).expect("default grid is valid")
    }
}

impl ParamGrid {
    /// Values are sorted and deduplicated. The grid must contain (0, 1, 0).
    pub fn new(mut alphas: Vec<f64>, mut betas: Vec<usize>, mut gammas: Vec<f64>) -> Result<Self> {
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        betas.sort_unstable();
        betas.dedup();
        gammas.sort_by(f64::total_cmp);
        gammas.dedup();
        for &a in &alphas {
            SelectionParams::new(a, 1, 0.0)?;
        }
        for &g in &gammas {
            SelectionParams::new(0.0, 1, g)?;
        }
        if betas.contains(&0) {
            return Err(Error::InvalidArgument("beta values must be >= 1".into()));
        }
        if !(alphas.contains(&0.0) && betas.contains(&1) && gammas.contains(&0.0)) {
            return Err(Error::InvalidArgument(
                "grid must contain the no-rule triple (0, 1, 0)".into(),
            ));
        }
        Ok(ParamGrid {
            alphas,
            betas,
            gammas,
        })
    }

    pub fn no_rule() -> Self {
        ParamGrid::new(vec![0.0], vec![1], vec![0.0]).expect("valid")
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn betas(&self) -> &[usize] {
        &self.betas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn len(&self) -> usize {
        self.alphas.len() * self.betas.len() * self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn triples(&self) -> Vec<SelectionParams> {
        let mut out = Vec::with_capacity(self.len());
        for &alpha in &self.alphas {
            for &beta in &self.betas {
                for &gamma in &self.gammas {
                    out.push(SelectionParams { alpha, beta, gamma });
                }
            }
        }
        out
    }

    /// Short content hash, recorded next to tuned parameters.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_string().as_bytes());
        hex::encode(h.finalize())[..16].to_string()
    }
}

impl fmt::Display for ParamGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        write!(
            f,
            "{};{};{}",
            join(self.alphas.iter().map(f64::to_string).collect()),
            join(self.betas.iter().map(usize::to_string).collect()),
            join(self.gammas.iter().map(f64::to_string).collect())
        )
    }
}

/// `default`, `norule`, or `alphas;betas;gammas` with comma-separated values.
impl FromStr for ParamGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "default" => return Ok(ParamGrid::default()),
            "norule" | "no-rule" => return Ok(ParamGrid::no_rule()),
            _ => {}
        }
        let bad = || Error::InvalidArgument(format!("bad grid `{s}`: expected `a,..;b,..;g,..`"));
        let parts: Vec<&str> = s.split(';').collect();
        let [a, b, g] = parts[..] else {
            return Err(bad());
        };
        fn list<T: FromStr>(s: &str) -> Option<Vec<T>> {
            s.split(',').map(|x| x.trim().parse().ok()).collect()
        }
        ParamGrid::new(
            list(a).ok_or_else(bad)?,
            list(b).ok_or_else(bad)?,
            list(g).ok_or_else(bad)?,
        )
    }
}

/// Total preference order among grid points with their scores: higher F1,
/// then larger alpha, smaller beta, larger gamma. `Greater` means preferred.
pub fn preference(a: &(SelectionParams, f64), b: &(SelectionParams, f64)) -> Ordering {
    a.1.total_cmp(&b.1)
        .then_with(|| a.0.alpha.total_cmp(&b.0.alpha))
        .then_with(|| b.0.beta.cmp(&a.0.beta))
        .then_with(|| a.0.gamma.total_cmp(&b.0.gamma))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub params: SelectionParams,
    pub report: EvalReport,
}

/// Labeled examples with their ranked run entries.
struct TuningSet {
    ranked: Vec<Vec<ScoredCandidate>>,
    gold: Vec<BTreeSet<String>>,
    relevant: usize,
}

impl TuningSet {
    fn new(run: &Run, gold: &Dataset) -> Result<Self> {
        gold.require_labeled()?;
        let mut ranked = Vec::with_capacity(gold.len());
        let mut golds = Vec::with_capacity(gold.len());
        for ex in gold.examples() {
            let list = run
                .entries
                .get(&ex.example_id)
                .ok_or_else(|| Error::MissingExample(ex.example_id.clone()))?;
            let mut list = list.clone();
            list.sort_by(rank_order);
            ranked.push(list);
            golds.push(ex.gold.clone().expect("labeled"));
        }
        let relevant = golds.iter().map(BTreeSet::len).sum();
        Ok(TuningSet {
            ranked,
            gold: golds,
            relevant,
        })
    }

    fn evaluate(&self, params: &SelectionParams) -> EvalReport {
        let (mut correct, mut retrieved) = (0, 0);
        for (list, gold) in self.ranked.iter().zip(&self.gold) {
            let chosen = select_ranked(list, params);
            retrieved += chosen.len();
            correct += chosen
                .iter()
                .filter(|c| gold.contains(&c.candidate_id))
                .count();
        }
        EvalReport::from_counts(correct, retrieved, self.relevant)
    }
}

/// Micro-F1 of `run` on `gold` under one parameter triple.
pub fn evaluate_params(run: &Run, gold: &Dataset, params: &SelectionParams) -> Result<EvalReport> {
    Ok(TuningSet::new(run, gold)?.evaluate(params))
}

/// Evaluates every grid triple on the labeled examples of `gold` and returns
/// the preferred maximizer. Run examples absent from `gold` are ignored;
/// gold examples absent from the run are an error. The result does not
/// depend on the rayon thread count.
pub fn grid_search(run: &Run, gold: &Dataset, grid: &ParamGrid) -> Result<TuneResult> {
    let set = TuningSet::new(run, gold)?;
    let best = grid
        .triples()
        .into_par_iter()
        .map(|p| {
            let report = set.evaluate(&p);
            TuneResult { params: p, report }
        })
        .reduce_with(
            |a, b| match preference(&(a.params, a.report.f1), &(b.params, b.report.f1)) {
                Ordering::Less => b,
                _ => a,
            },
        )
        .ok_or_else(|| Error::InvalidArgument("empty grid".into()))?;
    Ok(best)
}

/// Union of two selections per example; a candidate chosen by both keeps
/// the higher score. Scores are never combined across models.
pub fn ensemble_merge(a: &Selection, b: &Selection) -> Result<Run> {
    let ka: BTreeSet<&String> = a.answers.keys().collect();
    let kb: BTreeSet<&String> = b.answers.keys().collect();
    if ka != kb {
        let diff: Vec<&str> = ka
            .symmetric_difference(&kb)
            .take(5)
            .map(|s| s.as_str())
            .collect();
        return Err(Error::ExampleMismatch(diff.join(", ")));
    }
    let mut run = Run::new("ensemble");
    for (example_id, list_a) in &a.answers {
        let mut merged: BTreeMap<&str, f64> = BTreeMap::new();
        for c in list_a.iter().chain(&b.answers[example_id]) {
            merged
                .entry(c.candidate_id.as_str())
                .and_modify(|s| *s = s.max(c.score))
                .or_insert(c.score);
        }
        let mut list: Vec<ScoredCandidate> = merged
            .into_iter()
            .map(|(id, s)| ScoredCandidate::new(id, s))
            .collect();
        list.sort_by(rank_order);
        run.insert(example_id.clone(), list);
    }
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutcome {
    pub merged: Run,
    pub tuned: TuneResult,
    pub selection: Selection,
}

/// Merges two selections, tunes the selection rules on the examples of
/// `dev_gold`, then re-selects every merged example with the tuned triple.
pub fn ensemble_pipeline(
    a: &Selection,
    b: &Selection,
    dev_gold: &Dataset,
    grid: &ParamGrid,
) -> Result<EnsembleOutcome> {
    dev_gold.require_labeled()?;
    let merged = ensemble_merge(a, b)?;
    let tuned = grid_search(&merged, dev_gold, grid)?;
    let selection = apply_selection(&merged, &tuned.params);
    Ok(EnsembleOutcome {
        merged,
        tuned,
        selection,
    })
}

/// Persisted outcome of a tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedParams {
    pub alpha: f64,
    pub beta: usize,
    pub gamma: f64,
    pub dev_f1: f64,
    pub run_tag: String,
    pub grid_hash: String,
}

impl TunedParams {
    pub fn new(result: &TuneResult, run_tag: &str, grid: &ParamGrid) -> Self {
        TunedParams {
            alpha: result.params.alpha,
            beta: result.params.beta,
            gamma: result.params.gamma,
            dev_f1: result.report.f1,
            run_tag: run_tag.to_string(),
            grid_hash: grid.hash(),
        }
    }

    pub fn params(&self) -> Result<SelectionParams> {
        SelectionParams::new(self.alpha, self.beta, self.gamma)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("serializable");
        text.push('\n');
        fsio::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&fsio::read_to_string(path)?)
            .map_err(|e| Error::malformed(path, e.line(), e))
    }
}

/// `example_id<TAB>candidate_id` lines, sorted by example then candidate.
pub fn format_predictions(predictions: &Predictions) -> String {
    let mut out = String::new();
    for (e, ids) in predictions {
        for c in ids {
            out.push_str(e);
            out.push('\t');
            out.push_str(c);
            out.push('\n');
        }
    }
    out
}

pub fn write_predictions(predictions: &Predictions, path: &Path) -> Result<()> {
    fsio::write_atomic(path, format_predictions(predictions).as_bytes())
}

pub fn read_predictions(path: &Path) -> Result<Predictions> {
    let text = fsio::read_to_string(path)?;
    let mut out = Predictions::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((e, c)) = line.split_once('\t') else {
            return Err(Error::malformed(
                path,
                i + 1,
                "expected `example_id<TAB>candidate_id`",
            ));
        };
        let (e, c) = (e.trim(), c.trim());
        if e.is_empty() || c.is_empty() || c.contains('\t') {
            return Err(Error::malformed(
                path,
                i + 1,
                "expected `example_id<TAB>candidate_id`",
            ));
        }
        out.entry(e.to_string()).or_default().insert(c.to_string());
    }
    Ok(out)
}

#[derive(Serialize, Deserialize)]
struct SelectionRecord {
    example_id: String,
    selected: Vec<ScoredCandidate>,
}

/// Selection file: one JSON record per example, empty answer sets included.
pub fn write_selection(selection: &Selection, path: &Path) -> Result<()> {
    let records = selection.answers.iter().map(|(e, list)| SelectionRecord {
        example_id: e.clone(),
        selected: list.clone(),
    });
    fsio::write_atomic(path, to_jsonl(records).as_bytes())
}

pub fn read_selection(path: &Path) -> Result<Selection> {
    let text = fsio::read_to_string(path)?;
    let mut answers = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: SelectionRecord =
            serde_json::from_str(line).map_err(|e| Error::malformed(path, i + 1, e))?;
        if rec.selected.iter().any(|c| !c.score.is_finite()) {
            return Err(Error::malformed(path, i + 1, "non-finite score"));
        }
        if answers
            .insert(rec.example_id.clone(), rec.selected)
            .is_some()
        {
            return Err(Error::malformed(
                path,
                i + 1,
                format!("duplicate example `{}`", rec.example_id),
            ));
        }
    }
    Ok(Selection { answers })
}
