//! JSON interchange with the external NLP sidecar.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::document::{
    AnnotatedDocument, Dependency, Lemma, MorphFeatures, NamedEntity, PosTag, Span, Token,
    DEFAULT_DEPENDENCY_FLAVOR,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanJson {
    pub begin: usize,
    pub end: usize,
}

impl From<SpanJson> for Span {
    fn from(s: SpanJson) -> Span {
        Span::new(s.begin, s.end)
    }
}

impl From<Span> for SpanJson {
    fn from(s: Span) -> SpanJson {
        SpanJson {
            begin: s.begin,
            end: s.end,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueJson {
    pub begin: usize,
    pub end: usize,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphJson {
    pub begin: usize,
    pub end: usize,
    #[serde(default)]
    pub features: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyJson {
    pub begin: usize,
    pub end: usize,
    pub governor: [usize; 2],
    pub dependent: [usize; 2],
    #[serde(rename = "type")]
    pub dependency_type: String,
    #[serde(default = "default_flavor")]
    pub flavor: String,
}

fn default_flavor() -> String {
    DEFAULT_DEPENDENCY_FLAVOR.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityJson {
    pub begin: usize,
    pub end: usize,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidecarLayers {
    #[serde(default)]
    pub sentences: Vec<SpanJson>,
    #[serde(default)]
    pub tokens: Vec<SpanJson>,
    #[serde(default)]
    pub lemmas: Vec<ValueJson>,
    #[serde(default)]
    pub pos: Vec<ValueJson>,
    #[serde(default)]
    pub morph: Vec<MorphJson>,
    #[serde(default)]
    pub dependencies: Vec<DependencyJson>,
    #[serde(default)]
    pub entities: Vec<EntityJson>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SidecarPayload {
    pub document_id: String,
    pub sofa_sha256: String,
    #[serde(default)]
    pub layers: SidecarLayers,
}

impl SidecarPayload {
    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::SidecarRejected(format!("invalid payload: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("payload serializes")
    }
}

/// Lowercase hex SHA-256 of the sofa's UTF-8 bytes.
pub fn sofa_sha256(sofa: &str) -> String {
    hex::encode(Sha256::digest(sofa.as_bytes()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AttachOptions {
    /// Take sentences and tokens from the payload when it provides them.
    pub replace_segmentation: bool,
}

fn reject(message: String) -> Error {
    Error::SidecarRejected(message)
}

/// Returns a copy of `doc` whose lemma, pos, morphology, dependency and
/// entity layers come from `payload`, with token references re-linked by
/// exact span.
pub fn attach_external_annotations(
    doc: &AnnotatedDocument,
    payload: &SidecarPayload,
    options: AttachOptions,
) -> Result<AnnotatedDocument> {
    if payload.document_id != doc.document_id {
        return Err(reject(format!(
            "payload is for `{}`, document is `{}`",
            payload.document_id, doc.document_id
        )));
    }
    let hash = sofa_sha256(&doc.sofa);
    if !payload.sofa_sha256.eq_ignore_ascii_case(&hash) {
        return Err(reject(format!(
            "sofa hash mismatch: payload {} vs document {hash}",
            payload.sofa_sha256
        )));
    }
    check_offsets(&payload.layers, doc.sofa_len())?;

    let layers = &payload.layers;
    let mut out = doc.clone();
    if options.replace_segmentation && !layers.tokens.is_empty() {
        out.tokens = layers.tokens.iter().map(|s| Token::new((*s).into())).collect();
        if !layers.sentences.is_empty() {
            out.sentences = layers.sentences.iter().map(|&s| s.into()).collect();
        }
    }
    for token in &mut out.tokens {
        token.lemma = None;
        token.pos = None;
        token.morph = None;
    }
    let by_span: HashMap<Span, usize> = out
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.span, i))
        .collect();
    let find = |layer: &str, span: Span| {
        by_span
            .get(&span)
            .copied()
            .ok_or_else(|| reject(format!("{layer} at {span} matches no token")))
    };

    out.lemmas = layers
        .lemmas
        .iter()
        .map(|l| Lemma {
            span: Span::new(l.begin, l.end),
            value: l.value.clone(),
        })
        .collect();
    for (i, l) in out.lemmas.iter().enumerate() {
        let t = find("lemma", l.span)?;
        link(&mut out.tokens[t].lemma, i, "lemma", l.span)?;
    }

    out.pos_tags = layers
        .pos
        .iter()
        .map(|p| PosTag {
            span: Span::new(p.begin, p.end),
            value: p.value.clone(),
        })
        .collect();
    for (i, p) in out.pos_tags.iter().enumerate() {
        let t = find("pos", p.span)?;
        link(&mut out.tokens[t].pos, i, "pos", p.span)?;
    }

    out.morph = layers
        .morph
        .iter()
        .map(|m| {
            let span = Span::new(m.begin, m.end);
            let value = m
                .value
                .clone()
                .unwrap_or_else(|| MorphFeatures::canonical_value(&m.features));
            MorphFeatures::from_value(span, value).map_err(|e| reject(format!("morph at {span}: {e}")))
        })
        .collect::<Result<_>>()?;
    for (i, m) in out.morph.iter().enumerate() {
        let t = find("morph", m.span)?;
        link(&mut out.tokens[t].morph, i, "morph", m.span)?;
    }

    out.dependencies = layers
        .dependencies
        .iter()
        .map(|d| {
            Ok(Dependency {
                span: Span::new(d.begin, d.end),
                governor: find("dependency governor", Span::new(d.governor[0], d.governor[1]))?,
                dependent: find("dependency dependent", Span::new(d.dependent[0], d.dependent[1]))?,
                dependency_type: d.dependency_type.clone(),
                flavor: d.flavor.clone(),
            })
        })
        .collect::<Result<_>>()?;

    out.entities = layers
        .entities
        .iter()
        .map(|e| NamedEntity {
            span: Span::new(e.begin, e.end),
            label: e.label.clone(),
        })
        .collect();

    out.notes.push(format!("sidecar:{}", &hash[..12]));
    out.validate()
        .map_err(|e| reject(format!("attached document is invalid: {e}")))?;
    Ok(out)
}

fn link(slot: &mut Option<usize>, index: usize, layer: &str, span: Span) -> Result<()> {
    if slot.is_some() {
        return Err(reject(format!("second {layer} for token at {span}")));
    }
    *slot = Some(index);
    Ok(())
}

fn check_offsets(layers: &SidecarLayers, len: usize) -> Result<()> {
    let spans = layers
        .sentences
        .iter()
        .map(|s| ("sentence", s.begin, s.end))
        .chain(layers.tokens.iter().map(|s| ("token", s.begin, s.end)))
        .chain(layers.lemmas.iter().map(|s| ("lemma", s.begin, s.end)))
        .chain(layers.pos.iter().map(|s| ("pos", s.begin, s.end)))
        .chain(layers.morph.iter().map(|s| ("morph", s.begin, s.end)))
        .chain(layers.dependencies.iter().flat_map(|d| {
            [
                ("dependency", d.begin, d.end),
                ("dependency governor", d.governor[0], d.governor[1]),
                ("dependency dependent", d.dependent[0], d.dependent[1]),
            ]
        }))
        .chain(layers.entities.iter().map(|s| ("entity", s.begin, s.end)));
    for (layer, begin, end) in spans {
        if begin > end || end > len {
            return Err(reject(format!(
                "{layer} [{begin},{end}) is outside the sofa of length {len}"
            )));
        }
    }
    Ok(())
}

/// Builds the payload that describes `doc`'s current layers. Useful for
/// fixtures and for exporting native segmentation to the sidecar.
pub fn payload_from_document(doc: &AnnotatedDocument) -> SidecarPayload {
    let value = |span: Span, value: &str| ValueJson {
        begin: span.begin,
        end: span.end,
        value: value.to_string(),
    };
    SidecarPayload {
        document_id: doc.document_id.clone(),
        sofa_sha256: sofa_sha256(&doc.sofa),
        layers: SidecarLayers {
            sentences: doc.sentences.iter().map(|&s| s.into()).collect(),
            tokens: doc.tokens.iter().map(|t| t.span.into()).collect(),
            lemmas: doc.lemmas.iter().map(|l| value(l.span, &l.value)).collect(),
            pos: doc.pos_tags.iter().map(|p| value(p.span, &p.value)).collect(),
            morph: doc
                .morph
                .iter()
                .map(|m| MorphJson {
                    begin: m.span.begin,
                    end: m.span.end,
                    features: m.features().unwrap_or_default().into_iter().collect(),
                    value: Some(m.value.clone()),
                })
                .collect(),
            dependencies: doc
                .dependencies
                .iter()
                .map(|d| {
                    let g = doc.tokens[d.governor].span;
                    let t = doc.tokens[d.dependent].span;
                    DependencyJson {
                        begin: d.span.begin,
                        end: d.span.end,
                        governor: [g.begin, g.end],
                        dependent: [t.begin, t.end],
                        dependency_type: d.dependency_type.clone(),
                        flavor: d.flavor.clone(),
                    }
                })
                .collect(),
            entities: doc
                .entities
                .iter()
                .map(|e| EntityJson {
                    begin: e.span.begin,
                    end: e.span.end,
                    label: e.label.clone(),
                })
                .collect(),
        },
    }
}
