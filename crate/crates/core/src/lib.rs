//! Entailment ranking pipeline for legal case paragraphs.
//!
//! Candidate paragraphs are scored against a decision fragment (BM25 built
//! here, or any external reranker that writes a run file), answer sets are
//! chosen by three threshold rules tuned by exhaustive grid search, two
//! systems can be merged at the selection level, and results are scored
//! with micro-averaged F1.
//!
//! ```
//! use entailrank::runs::ScoredCandidate;
//! use entailrank::selection::{select_answers, SelectionParams};
//!
//! let scored = vec![
//!     ScoredCandidate::new("001", 0.91),
//!     ScoredCandidate::new("014", 0.90),
//!     ScoredCandidate::new("007", 0.12),
//! ];
//! let params = SelectionParams::new(0.0, 3, 0.98).unwrap();
//! let chosen = select_answers(&scored, &params).unwrap();
//! assert_eq!(chosen.len(), 2);
//! ```

pub mod bm25;
pub mod corpus;
pub mod error;
pub mod fsio;
pub mod metrics;
pub mod runs;
pub mod selection;
pub mod textproc;

pub use bm25::{Bm25Params, Index, NormalizeMode};
pub use corpus::{CandidateParagraph, Dataset, QueryExample, StatsReport};
pub use error::{Error, ErrorClass, Result};
pub use metrics::{EvalReport, Predictions};
pub use runs::{Run, ScoredCandidate};
pub use selection::{ParamGrid, Selection, SelectionParams, TuneResult};
pub use textproc::{Analyzer, SentenceSplitter, Token};
