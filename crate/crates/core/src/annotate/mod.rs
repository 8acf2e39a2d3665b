//! Native text extraction, normalization, segmentation and attachment of
//! externally produced annotation layers.

pub mod document;
pub mod extract;
pub mod normalize;
pub mod segment;
pub mod sidecar;

pub use document::{
    AnnotatedDocument, CharIndex, Dependency, Lemma, MorphFeatures, NamedEntity, PosTag, Span,
    Token,
};
pub use extract::{dehyphenate, extract_native_text, HyphenLexicon};
pub use normalize::normalize_text;
pub use segment::{segment, Segmenter};
pub use sidecar::{attach_external_annotations, sofa_sha256, AttachOptions, SidecarPayload};
