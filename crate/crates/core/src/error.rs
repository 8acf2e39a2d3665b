use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the pipeline stages.
///
/// Per-document failures are collected by the orchestrator rather than
/// aborting a batch, so most variants carry the document id.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest line {line}: {message}")]
    ManifestParse { line: u64, message: String },

    #[error("duplicate manifest id `{id}` on lines {first_line} and {second_line}")]
    DuplicateId {
        id: String,
        first_line: u64,
        second_line: u64,
    },

    #[error("fetch failed for `{id}`: {message}")]
    Fetch { id: String, message: String },

    #[error("cannot classify `{id}`: {message}")]
    Classification { id: String, message: String },

    #[error("precondition failed for `{id}`: {message}")]
    Precondition { id: String, message: String },

    #[error("rendering `{id}` failed on page {page}: {message}")]
    Render {
        id: String,
        page: usize,
        message: String,
    },

    #[error("text extraction failed for `{id}`: {message}")]
    Extraction { id: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("OCR engine failed on `{id}` page {page}: {message}\n{stderr}")]
    OcrEngine {
        id: String,
        page: usize,
        message: String,
        stderr: String,
    },

    #[error("invalid annotated document: {0}")]
    InvalidDocument(String),

    #[error("sidecar payload rejected: {0}")]
    SidecarRejected(String),

    #[error("no session date found for `{0}`")]
    MetadataMissing(String),

    #[error("malformed XMI: {0}")]
    XmiMalformed(String),

    #[error("dangling XMI reference: attribute `{attribute}` points to missing id {id}")]
    XmiDanglingReference { attribute: String, id: String },

    #[error("XMI offset out of range: [{begin},{end}) exceeds sofa length {len}")]
    XmiOffsetOutOfRange { begin: usize, end: usize, len: usize },

    #[error("dictionary line {line}: {message}")]
    Dictionary { line: usize, message: String },

    #[error("invalid value: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
