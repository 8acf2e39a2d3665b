//! Batch toolkit that turns plenary protocols of German-speaking parliaments
//! into annotated XMI corpora: fetch, classify, OCR or extract, annotate,
//! package, and audit OCR quality.

pub mod annotate;
pub mod corpus;
pub mod error;
pub mod fetch;
pub mod imaging;
pub mod manifest;
pub mod metadata;
pub mod ocr;
pub mod pdf;
pub mod pipeline;
pub mod quality;
pub mod record;
pub mod xmi;

pub use annotate::{AnnotatedDocument, Span};
pub use error::{Error, Result};
pub use manifest::{load_manifest, parse_manifest, ManifestEntry, SourceManifest};
pub use metadata::{extract_metadata, DocumentMetaData, SessionMetadata};
pub use ocr::{compute_worker_budget, OcrStrategy, WorkerBudget};
pub use pipeline::{run_pipeline, PipelineConfig, RunSummary, Stage, StageFailure};
pub use quality::{FrequencyDictionary, QualityReport};
pub use record::{Classification, DocumentRecord, Provenance, Script, State};
