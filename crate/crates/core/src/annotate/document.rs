use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metadata::{DocumentMetaData, SessionMetadata};
use crate::record::{Provenance, Script};

/// Half-open range `[begin, end)` in Unicode scalar values of the sofa.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span {
    pub begin: usize,
    pub end: usize,
}

impl Span {
    pub fn new(begin: usize, end: usize) -> Self {
        Span { begin, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.begin)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.begin <= other.begin && other.end <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.begin, self.end)
    }
}

/// Layer references are indices into the owning document's layers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub span: Span,
    pub lemma: Option<usize>,
    pub pos: Option<usize>,
    pub morph: Option<usize>,
    /// Position inside a multi-part token; 0 for ordinary tokens.
    pub order: u32,
}

impl Token {
    pub fn new(span: Span) -> Self {
        Token {
            span,
            lemma: None,
            pos: None,
            morph: None,
            order: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma {
    pub span: Span,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosTag {
    pub span: Span,
    pub value: String,
}

/// Morphological features in the canonical `Key=Val|Key=Val` form. Gender,
/// number and case are mirrored into dedicated fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphFeatures {
    pub span: Span,
    pub gender: Option<String>,
    pub number: Option<String>,
    pub case: Option<String>,
    pub value: String,
}

impl MorphFeatures {
    pub fn from_value(span: Span, value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        let features = parse_feature_string(&value)?;
        let get = |k: &str| features.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
        Ok(MorphFeatures {
            span,
            gender: get("Gender"),
            number: get("Number"),
            case: get("Case"),
            value,
        })
    }

    /// Canonical string for a feature map; keys come out in sorted order.
    pub fn canonical_value(features: &BTreeMap<String, String>) -> String {
        features
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn features(&self) -> Result<Vec<(String, String)>> {
        parse_feature_string(&self.value)
    }

    fn check(&self) -> std::result::Result<(), String> {
        let features = parse_feature_string(&self.value).map_err(|e| e.to_string())?;
        let get = |k: &str| features.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
        for (key, field) in [("Gender", &self.gender), ("Number", &self.number), ("Case", &self.case)] {
            if get(key) != field.as_deref() {
                return Err(format!(
                    "morphology {} field {key}={:?} disagrees with value `{}`",
                    self.span, field, self.value
                ));
            }
        }
        Ok(())
    }
}

pub fn parse_feature_string(value: &str) -> Result<Vec<(String, String)>> {
    if value.is_empty() || value == "_" {
        return Ok(Vec::new());
    }
    value
        .split('|')
        .map(|pair| match pair.split_once('=') {
            Some((k, v)) if !k.is_empty() && !v.is_empty() => Ok((k.to_string(), v.to_string())),
            _ => Err(Error::Invalid(format!("malformed morphological feature `{pair}` in `{value}`"))),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dependency {
    pub span: Span,
    /// Token index of the head.
    pub governor: usize,
    /// Token index of the dependent.
    pub dependent: usize,
    pub dependency_type: String,
    pub flavor: String,
}

pub const DEFAULT_DEPENDENCY_FLAVOR: &str = "basic";

impl Dependency {
    pub fn is_root(&self) -> bool {
        matches!(self.dependency_type.as_str(), "ROOT" | "root" | "--")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NamedEntity {
    pub span: Span,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDocument {
    pub document_id: String,
    pub parliament: String,
    pub sofa: String,
    pub sentences: Vec<Span>,
    pub tokens: Vec<Token>,
    pub lemmas: Vec<Lemma>,
    pub pos_tags: Vec<PosTag>,
    pub morph: Vec<MorphFeatures>,
    pub dependencies: Vec<Dependency>,
    pub entities: Vec<NamedEntity>,
    /// `None` when no session date could be found for the protocol.
    pub metadata: Option<SessionMetadata>,
    pub document_meta: DocumentMetaData,
    pub provenance: Provenance,
    pub script: Script,
    /// Free-form processing notes, e.g. which sidecar payload was attached.
    pub notes: Vec<String>,
}

/// True for characters XML 1.0 can carry, either literally or escaped.
pub fn is_xml_char(c: char) -> bool {
    matches!(c, '\t' | '\n' | '\r' | '\u{20}'..='\u{D7FF}' | '\u{E000}'..='\u{FFFD}' | '\u{10000}'..)
}

impl AnnotatedDocument {
    pub fn new(
        document_id: impl Into<String>,
        parliament: impl Into<String>,
        sofa: impl Into<String>,
        provenance: Provenance,
        script: Script,
    ) -> Self {
        let document_id = document_id.into();
        AnnotatedDocument {
            document_meta: DocumentMetaData::for_document(&document_id),
            document_id,
            parliament: parliament.into(),
            sofa: sofa.into(),
            sentences: Vec::new(),
            tokens: Vec::new(),
            lemmas: Vec::new(),
            pos_tags: Vec::new(),
            morph: Vec::new(),
            dependencies: Vec::new(),
            entities: Vec::new(),
            metadata: None,
            provenance,
            script,
            notes: Vec::new(),
        }
    }

    pub fn sofa_len(&self) -> usize {
        self.sofa.chars().count()
    }

    pub fn char_index(&self) -> CharIndex {
        CharIndex::new(&self.sofa)
    }

    pub fn token_text<'a>(&'a self, index: &CharIndex, token: &Token) -> &'a str {
        index.slice(&self.sofa, token.span)
    }

    /// Checks every structural invariant and names the first violation.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(Error::InvalidDocument)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if let Some((i, c)) = self.sofa.chars().enumerate().find(|(_, c)| !is_xml_char(*c)) {
            return Err(format!("sofa character U+{:04X} at offset {i} cannot be serialized", c as u32));
        }
        let len = self.sofa_len();
        let in_range = |layer: &str, i: usize, s: &Span| {
            if s.begin <= s.end && s.end <= len {
                Ok(())
            } else {
                Err(format!("{layer}[{i}] span {s} outside sofa of length {len}"))
            }
        };
        for (i, s) in self.sentences.iter().enumerate() {
            in_range("sentence", i, s)?;
        }
        for (i, t) in self.tokens.iter().enumerate() {
            in_range("token", i, &t.span)?;
            if i > 0 && self.tokens[i - 1].span.end > t.span.begin {
                return Err(format!(
                    "tokens {} and {} overlap or are out of order",
                    self.tokens[i - 1].span, t.span
                ));
            }
        }
        for (i, l) in self.lemmas.iter().enumerate() {
            in_range("lemma", i, &l.span)?;
            if l.value.is_empty() {
                return Err(format!("lemma {} has an empty value", l.span));
            }
        }
        for (i, p) in self.pos_tags.iter().enumerate() {
            in_range("pos", i, &p.span)?;
            if p.value.is_empty() {
                return Err(format!("pos tag {} has an empty value", p.span));
            }
        }
        for (i, m) in self.morph.iter().enumerate() {
            in_range("morph", i, &m.span)?;
            m.check()?;
        }
        for (i, e) in self.entities.iter().enumerate() {
            in_range("entity", i, &e.span)?;
            if e.label.is_empty() {
                return Err(format!("named entity {} has an empty label", e.span));
            }
        }
        for t in &self.tokens {
            let refs = [
                ("lemma", t.lemma.map(|i| self.lemmas.get(i).map(|x| x.span))),
                ("pos", t.pos.map(|i| self.pos_tags.get(i).map(|x| x.span))),
                ("morph", t.morph.map(|i| self.morph.get(i).map(|x| x.span))),
            ];
            for (layer, target) in refs {
                match target {
                    None => {}
                    Some(None) => return Err(format!("token {} references a missing {layer}", t.span)),
                    Some(Some(span)) if span != t.span => {
                        return Err(format!("token {} references {layer} at {span}", t.span))
                    }
                    Some(Some(_)) => {}
                }
            }
        }
        for (i, d) in self.dependencies.iter().enumerate() {
            in_range("dependency", i, &d.span)?;
            if d.governor >= self.tokens.len() || d.dependent >= self.tokens.len() {
                return Err(format!("dependency {} references a missing token", d.span));
            }
            if d.governor == d.dependent && !d.is_root() {
                return Err(format!(
                    "dependency {} of type `{}` governs itself",
                    d.span, d.dependency_type
                ));
            }
        }
        if let Some(meta) = &self.metadata {
            meta.validate().map_err(|e| e.to_string())?;
            if meta.title != self.document_meta.document_title {
                return Err(format!(
                    "session title `{}` differs from document title `{}`",
                    meta.title, self.document_meta.document_title
                ));
            }
        }
        self.document_meta.validate().map_err(|e| e.to_string())?;
        Ok(())
    }
}

/// Maps character offsets to byte offsets for one string.
#[derive(Debug, Clone)]
pub struct CharIndex {
    bytes: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut bytes: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bytes.push(text.len());
        CharIndex { bytes }
    }

    pub fn char_len(&self) -> usize {
        self.bytes.len() - 1
    }

    pub fn byte_offset(&self, char_offset: usize) -> usize {
        self.bytes[char_offset]
    }

    pub fn slice<'a>(&self, text: &'a str, span: Span) -> &'a str {
        &text[self.bytes[span.begin]..self.bytes[span.end]]
    }
}
