//! Spellcheck-based audit of OCR output.

pub mod report;
pub mod symspell;

pub use report::{
    aggregate_reports, is_checkable, percent, read_reports, score_document, score_tokens,
    spellcheck_token, write_reports, write_reports_to, QualityReport, Verdict, REPORT_HEADER,
};
pub use symspell::{
    osa_distance, FrequencyDictionary, Suggestion, DEFAULT_MAX_EDIT_DISTANCE, DEFAULT_PREFIX_LENGTH,
};
