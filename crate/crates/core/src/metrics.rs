//! Micro-averaged precision, recall and F1.
//!
//! Counts are summed over all queries before dividing, so a query with many
//! relevant paragraphs weighs more than one with a single paragraph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Dataset;
use crate::error::{Error, Result};

/// Predicted candidate ids per example.
pub type Predictions = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub retrieved: usize,
    pub relevant: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalReport {
    /// P = correct/retrieved (0 if nothing retrieved), R = correct/relevant
    /// (0 if nothing relevant), F1 = 2PR/(P+R) (0 if P+R = 0).
    ///
    /// F1 is evaluated as the single division 2·correct/(retrieved+relevant),
    /// so equal ratios of counts always give bit-identical values and grid
    /// ties are decided by the tie-break order, not by rounding.
    pub fn from_counts(correct: usize, retrieved: usize, relevant: usize) -> Self {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let precision = ratio(correct, retrieved);
        let recall = ratio(correct, relevant);
        let f1 = if correct == 0 {
            0.0
        } else {
            (2 * correct) as f64 / (retrieved + relevant) as f64
        };
        EvalReport {
            retrieved,
            relevant,
            correct,
            precision,
            recall,
            f1,
        }
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10}{:>10}", "retrieved", self.retrieved)?;
        writeln!(f, "{:<10}{:>10}", "relevant", self.relevant)?;
        writeln!(f, "{:<10}{:>10}", "correct", self.correct)?;
        writeln!(f, "{:<10}{:>10.4}", "precision", self.precision)?;
        writeln!(f, "{:<10}{:>10.4}", "recall", self.recall)?;
        write!(f, "{:<10}{:>10.4}", "f1", self.f1)
    }
}

pub fn micro_prf(predictions: &Predictions, gold: &Dataset) -> Result<EvalReport> {
    gold.require_labeled()?;
    let by_id = gold.by_id();
    if let Some(unknown) = predictions.keys().find(|k| !by_id.contains_key(k.as_str())) {
        return Err(Error::UnknownExample(unknown.clone()));
    }
    let (mut correct, mut retrieved, mut relevant) = (0, 0, 0);
    for ex in gold.examples() {
        let truth = ex.gold.as_ref().expect("labeled");
        relevant += truth.len();
        if let Some(pred) = predictions.get(&ex.example_id) {
            retrieved += pred.len();
            correct += pred.intersection(truth).count();
        }
    }
    Ok(EvalReport::from_counts(correct, retrieved, relevant))
}

/// Signed componentwise difference `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportDelta {
    pub retrieved: i64,
    pub relevant: i64,
    pub correct: i64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn compare_reports(a: &EvalReport, b: &EvalReport) -> ReportDelta {
    ReportDelta {
        retrieved: a.retrieved as i64 - b.retrieved as i64,
        relevant: a.relevant as i64 - b.relevant as i64,
        correct: a.correct as i64 - b.correct as i64,
        precision: a.precision - b.precision,
        recall: a.recall - b.recall,
        f1: a.f1 - b.f1,
    }
}

impl fmt::Display for ReportDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Δprecision {:+.4}  Δrecall {:+.4}  Δf1 {:+.4}",
            self.precision, self.recall, self.f1
        )
    }
}
