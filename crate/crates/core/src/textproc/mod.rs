//! Text processing: sentences, BM25 analysis, windowing, the reranker input
//! template and training-data augmentation.

mod analyzer;
mod augment;
pub mod porter;
mod sentences;
mod template;
mod windows;

pub use analyzer::{Analyzer, Token};
pub use augment::{
    balanced_sample, make_artificial_fragments, training_pairs, ArtificialFragment, LabeledPair,
    DEFAULT_SAMPLE_SIZE,
};
pub use sentences::{segment_sentences, Sentence, SentenceSplitter};
pub use template::{render_t5_input, DEFAULT_TOKEN_LIMIT};
pub use windows::{window_ranges, window_segments, DEFAULT_STRIDE, DEFAULT_WINDOW};
