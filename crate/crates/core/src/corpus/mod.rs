//! Corpus construction: documents in, keyword-filtered three-sentence passages
//! and reproducible splits out.

mod document;
mod language;
mod passage;
mod segment;
mod split;

pub use document::{load_documents, Document, DocumentFormat, SourceType};
pub use language::{is_english, ENGLISH_MIN_RATIO, LANGUAGE_MIN_TOKENS, LANGUAGE_WINDOW};
pub use passage::{
    build_passages, filter_passages, filter_with, gold_map, load_passages, window_passages,
    IngestReport, Passage, DEFAULT_WINDOW,
};
pub use segment::segment_sentences;
pub use split::{split_dataset, DatasetSplit, MIN_SPLIT_SIZE};
