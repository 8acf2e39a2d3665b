//! UIMA XMI serialization using the DKPro and TextTechnologyLab type names.
//!
//! Element and attribute local names follow the published corpus files.
//! Namespace prefixes are fixed and bound to the URIs below; the reader
//! matches on namespace URI, so files using other prefixes still load.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use quick_xml::events::{BytesStart, Event};
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;

use crate::annotate::{
    AnnotatedDocument, Dependency, Lemma, MorphFeatures, NamedEntity, PosTag, Span, Token,
};
use crate::error::{Error, Result};
use crate::fetch::parliament_dir;
use crate::metadata::{DocumentMetaData, SessionMetadata};
use crate::record::{Provenance, Script};

pub const NS_XMI: &str = "http://www.omg.org/XMI";
pub const NS_CAS: &str = "http:///uima/cas.ecore";
pub const NS_TTLAB: &str = "http:///org/texttechnologylab/annotation.ecore";
pub const NS_METADATA: &str = "http:///de/tudarmstadt/ukp/dkpro/core/api/metadata/type.ecore";
pub const NS_SEGMENTATION: &str = "http:///de/tudarmstadt/ukp/dkpro/core/api/segmentation/type.ecore";
pub const NS_NER: &str = "http:///de/tudarmstadt/ukp/dkpro/core/api/ner/type.ecore";
pub const NS_POS: &str = "http:///de/tudarmstadt/ukp/dkpro/core/api/lexmorph/type/pos.ecore";
pub const NS_MORPH: &str = "http:///de/tudarmstadt/ukp/dkpro/core/api/lexmorph/type/morph.ecore";
pub const NS_DEPENDENCY: &str = "http:///de/tudarmstadt/ukp/dkpro/core/api/syntax/type/dependency.ecore";
pub const NS_PARLAGEST: &str = "http:///org/parlagest/type.ecore";

const NAMESPACES: &[(&str, &str)] = &[
    ("xmi", NS_XMI),
    ("cas", NS_CAS),
    ("annotation2", NS_TTLAB),
    ("type4", NS_METADATA),
    ("type5", NS_NER),
    ("type6", NS_SEGMENTATION),
    ("pos", NS_POS),
    ("morph", NS_MORPH),
    ("dependency", NS_DEPENDENCY),
    ("parlagest", NS_PARLAGEST),
];

const SOFA_ID: usize = 1;

/// `<out>/<parliament>/xmi/<legislature>/`, without the legislature level
/// when it is unknown.
pub fn package_dir(out: &Path, parliament: &str, legislature: Option<u32>) -> PathBuf {
    let dir = out.join(parliament_dir(parliament)).join("xmi");
    match legislature {
        Some(l) => dir.join(l.to_string()),
        None => dir,
    }
}

pub fn xmi_file_name(document_id: &str, gzip: bool) -> String {
    if gzip {
        format!("{document_id}.xmi.gz")
    } else {
        format!("{document_id}.xmi")
    }
}

fn escape_attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\t' => out.push_str("&#9;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            c => out.push(c),
        }
    }
    out
}

struct Element {
    name: &'static str,
    attrs: Vec<(&'static str, String)>,
}

impl Element {
    fn new(name: &'static str, id: usize) -> Self {
        Element {
            name,
            attrs: vec![("xmi:id", id.to_string()), ("sofa", SOFA_ID.to_string())],
        }
    }

    fn spanned(name: &'static str, id: usize, span: Span) -> Self {
        Element::new(name, id)
            .attr("begin", span.begin)
            .attr("end", span.end)
    }

    fn attr(mut self, key: &'static str, value: impl ToString) -> Self {
        self.attrs.push((key, value.to_string()));
        self
    }

    fn opt(self, key: &'static str, value: Option<impl ToString>) -> Self {
        match value {
            Some(v) => self.attr(key, v),
            None => self,
        }
    }

    fn render(&self, out: &mut String) {
        out.push('<');
        out.push_str(self.name);
        for (k, v) in &self.attrs {
            let _ = write!(out, " {k}=\"{}\"", escape_attr(v));
        }
        out.push_str("/>\n");
    }
}

/// Serializes a valid document to an XMI string.
pub fn to_xmi_string(doc: &AnnotatedDocument) -> Result<String> {
    doc.validate()?;
    let mut next_id = SOFA_ID + 1;
    let mut alloc = |n: usize| {
        let first = next_id;
        next_id += n;
        first
    };
    let annotation_id = alloc(doc.metadata.is_some() as usize);
    let meta_id = alloc(1);
    let info_id = alloc(1);
    let notes_id = alloc(doc.notes.len());
    let sentence_id = alloc(doc.sentences.len());
    let lemma_id = alloc(doc.lemmas.len());
    let pos_id = alloc(doc.pos_tags.len());
    let morph_id = alloc(doc.morph.len());
    let token_id = alloc(doc.tokens.len());
    let dependency_id = alloc(doc.dependencies.len());
    let entity_id = alloc(doc.entities.len());
    let sofa_len = doc.sofa_len();

    let mut elements = Vec::new();
    if let Some(m) = &doc.metadata {
        elements.push(
            Element::new("annotation2:DocumentAnnotation", annotation_id)
                .attr("dateDay", m.date_day)
                .attr("subtitle", &m.subtitle)
                .attr("dateMonth", m.date_month)
                .attr("dateYear", m.date_year)
                .attr("timestamp", m.timestamp_ms),
        );
    }
    let dm = &doc.document_meta;
    elements.push(
        Element::spanned("type4:DocumentMetaData", meta_id, Span::new(0, sofa_len))
            .attr("language", &dm.language)
            .attr("documentTitle", &dm.document_title)
            .attr("documentId", &dm.document_id)
            .opt("documentUri", (!dm.document_uri.is_empty()).then_some(&dm.document_uri))
            .opt(
                "documentBaseUri",
                (!dm.document_base_uri.is_empty()).then_some(&dm.document_base_uri),
            )
            .attr("isLastSegment", dm.is_last_segment),
    );
    elements.push(
        Element::spanned("parlagest:ProcessingInfo", info_id, Span::new(0, 0))
            .attr("documentId", &doc.document_id)
            .attr("parliament", &doc.parliament)
            .attr("provenance", doc.provenance)
            .attr("script", doc.script)
            .attr("metadataMissing", doc.metadata.is_none()),
    );
    for (i, note) in doc.notes.iter().enumerate() {
        elements.push(
            Element::spanned("parlagest:ProcessingNote", notes_id + i, Span::new(0, 0)).attr("value", note),
        );
    }
    for (i, s) in doc.sentences.iter().enumerate() {
        elements.push(Element::spanned("type6:Sentence", sentence_id + i, *s));
    }
    for (i, l) in doc.lemmas.iter().enumerate() {
        elements.push(Element::spanned("type6:Lemma", lemma_id + i, l.span).attr("value", &l.value));
    }
    for (i, p) in doc.pos_tags.iter().enumerate() {
        elements.push(Element::spanned("pos:POS", pos_id + i, p.span).attr("PosValue", &p.value));
    }
    for (i, m) in doc.morph.iter().enumerate() {
        elements.push(
            Element::spanned("morph:MorphologicalFeatures", morph_id + i, m.span)
                .opt("gender", m.gender.as_ref())
                .opt("number", m.number.as_ref())
                .opt("case", m.case.as_ref())
                .attr("value", &m.value),
        );
    }
    for (i, t) in doc.tokens.iter().enumerate() {
        elements.push(
            Element::spanned("type6:Token", token_id + i, t.span)
                .opt("lemma", t.lemma.map(|x| lemma_id + x))
                .opt("pos", t.pos.map(|x| pos_id + x))
                .opt("morph", t.morph.map(|x| morph_id + x))
                .attr("order", t.order),
        );
    }
    for (i, d) in doc.dependencies.iter().enumerate() {
        elements.push(
            Element::spanned("dependency:Dependency", dependency_id + i, d.span)
                .attr("Governor", token_id + d.governor)
                .attr("Dependent", token_id + d.dependent)
                .attr("DependencyType", &d.dependency_type)
                .attr("flavor", &d.flavor),
        );
    }
    for (i, e) in doc.entities.iter().enumerate() {
        elements.push(Element::spanned("type5:NamedEntity", entity_id + i, e.span).attr("value", &e.label));
    }

    let mut out = String::with_capacity(doc.sofa.len() * 2 + elements.len() * 96 + 1024);
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<xmi:XMI");
    for (prefix, uri) in NAMESPACES {
        let _ = write!(out, " xmlns:{prefix}=\"{uri}\"");
    }
    out.push_str(" xmi:version=\"2.0\">\n<cas:NULL xmi:id=\"0\"/>\n");
    for e in &elements {
        e.render(&mut out);
    }
    let _ = writeln!(
        out,
        "<cas:Sofa xmi:id=\"{SOFA_ID}\" sofaNum=\"1\" sofaID=\"_InitialView\" mimeType=\"text\" sofaString=\"{}\"/>",
        escape_attr(&doc.sofa)
    );
    let members: Vec<String> = elements.iter().map(|e| e.attrs[0].1.clone()).collect();
    let _ = writeln!(out, "<cas:View sofa=\"{SOFA_ID}\" members=\"{}\"/>", members.join(" "));
    out.push_str("</xmi:XMI>\n");
    Ok(out)
}

/// Serialized bytes, gzip-compressed when asked. Compression output is
/// deterministic: the gzip header carries no timestamp or file name.
pub fn to_xmi_bytes(doc: &AnnotatedDocument, gzip: bool) -> Result<Vec<u8>> {
    let xml = to_xmi_string(doc)?;
    if !gzip {
        return Ok(xml.into_bytes());
    }
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(xml.as_bytes())
        .and_then(|_| enc.finish())
        .map_err(|e| Error::Invalid(format!("gzip failed: {e}")))
}

/// Writes `<dir>/<id>.xmi[.gz]` and returns its path.
pub fn write_xmi(doc: &AnnotatedDocument, dir: &Path, gzip: bool) -> Result<PathBuf> {
    let bytes = to_xmi_bytes(doc, gzip)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(xmi_file_name(&doc.document_id, gzip));
    let partial = path.with_extension("part");
    fs::write(&partial, &bytes).map_err(|e| Error::io(&partial, e))?;
    fs::rename(&partial, &path).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_xmi(path: &Path) -> Result<AnnotatedDocument> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_xmi_bytes(&bytes)
}

/// Parses plain or gzip-compressed XMI.
pub fn from_xmi_bytes(bytes: &[u8]) -> Result<AnnotatedDocument> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut xml = Vec::new();
        GzDecoder::new(bytes)
            .read_to_end(&mut xml)
            .map_err(|e| Error::XmiMalformed(format!("gzip: {e}")))?;
        parse(&xml)
    } else {
        parse(bytes)
    }
}

pub fn from_xmi_str(xml: &str) -> Result<AnnotatedDocument> {
    parse(xml.as_bytes())
}

#[derive(Debug)]
struct RawElement {
    ns: String,
    local: String,
    attrs: HashMap<String, String>,
}

impl RawElement {
    fn is(&self, ns: &str, local: &str) -> bool {
        self.ns == ns && self.local == local
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.attrs.get(key).map(String::as_str)
    }

    fn text(&self, key: &str) -> String {
        self.get(key).unwrap_or_default().to_string()
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::XmiMalformed(format!("{} lacks attribute `{key}`", self.local)))
    }

    fn number<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.required(key)?;
        raw.parse()
            .map_err(|_| Error::XmiMalformed(format!("{}@{key}=`{raw}` is not a number", self.local)))
    }

    fn opt_number<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.number(key).map(Some),
        }
    }

    fn span(&self, sofa_len: usize) -> Result<Span> {
        let begin: usize = self.number("begin")?;
        let end: usize = self.number("end")?;
        if begin > end || end > sofa_len {
            return Err(Error::XmiOffsetOutOfRange {
                begin,
                end,
                len: sofa_len,
            });
        }
        Ok(Span::new(begin, end))
    }
}

fn malformed(e: impl std::fmt::Display) -> Error {
    Error::XmiMalformed(e.to_string())
}

fn collect_attrs(reader: &NsReader<&[u8]>, start: &BytesStart) -> Result<HashMap<String, String>> {
    let mut attrs = HashMap::new();
    for attr in start.attributes() {
        let attr = attr.map_err(malformed)?;
        let raw_key = attr.key.as_ref();
        if raw_key.starts_with(b"xmlns") {
            continue;
        }
        let (ns, local) = reader.resolve_attribute(attr.key);
        let local = String::from_utf8_lossy(local.as_ref()).into_owned();
        let key = match ns {
            ResolveResult::Bound(ns) if ns.as_ref() == NS_XMI.as_bytes() => format!("xmi:{local}"),
            ResolveResult::Unknown(p) => {
                return Err(malformed(format!("unbound prefix `{}`", String::from_utf8_lossy(&p))))
            }
            _ => local,
        };
        let value = attr.decode_and_unescape_value(reader.decoder()).map_err(malformed)?;
        attrs.insert(key, value.into_owned());
    }
    Ok(attrs)
}

fn read_elements(xml: &[u8]) -> Result<Vec<RawElement>> {
    let mut reader = NsReader::from_reader(xml);
    let mut buf = Vec::new();
    let mut depth = 0usize;
    let mut saw_root = false;
    let mut out = Vec::new();
    loop {
        let (ns, event) = reader.read_resolved_event_into(&mut buf).map_err(malformed)?;
        let ns = match ns {
            ResolveResult::Bound(ns) => Some(String::from_utf8_lossy(ns.as_ref()).into_owned()),
            ResolveResult::Unbound => None,
            ResolveResult::Unknown(p) => {
                return Err(malformed(format!("unbound prefix `{}`", String::from_utf8_lossy(&p))))
            }
        };
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let is_empty = matches!(event, Event::Empty(_));
                let local = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
                if depth == 0 {
                    if saw_root || ns.as_deref() != Some(NS_XMI) || local != "XMI" {
                        return Err(malformed(format!("unexpected root element `{local}`")));
                    }
                    saw_root = true;
                } else if depth == 1 {
                    let ns = ns.unwrap_or_default();
                    let e = e.clone().into_owned();
                    out.push(RawElement {
                        attrs: collect_attrs(&reader, &e)?,
                        ns,
                        local,
                    });
                }
                if !is_empty {
                    depth += 1;
                }
            }
            Event::End(_) => depth = depth.checked_sub(1).ok_or_else(|| malformed("unbalanced end tag"))?,
            Event::Text(ref t) if depth == 0 && !t.iter().all(u8::is_ascii_whitespace) => {
                return Err(malformed("text outside the root element"));
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if !saw_root || depth != 0 {
        return Err(malformed("document is truncated or has no XMI root"));
    }
    Ok(out)
}

fn parse_enum<T: std::str::FromStr>(e: &RawElement, key: &str) -> Result<T> {
    let raw = e.required(key)?;
    raw.parse()
        .map_err(|_| Error::XmiMalformed(format!("{}@{key}=`{raw}` is not a known value", e.local)))
}

/// Builds a document from parsed XMI. A file without `ProcessingInfo`
/// takes its id from `documentId` minus the XMI extension and defaults to
/// native-text Antiqua provenance with an empty parliament.
fn parse(xml: &[u8]) -> Result<AnnotatedDocument> {
    let elements = read_elements(xml)?;
    let sofa_elems: Vec<&RawElement> = elements.iter().filter(|e| e.is(NS_CAS, "Sofa")).collect();
    let sofa = match sofa_elems.as_slice() {
        [one] => one.text("sofaString"),
        [] => return Err(malformed("no cas:Sofa element")),
        _ => return Err(malformed("more than one cas:Sofa element")),
    };
    let sofa_len = sofa.chars().count();

    let mut seen_ids = std::collections::HashSet::new();
    for e in &elements {
        if let Some(id) = e.get("xmi:id") {
            if !seen_ids.insert(id.to_string()) {
                return Err(malformed(format!("duplicate xmi:id {id}")));
            }
        }
    }

    let mut doc = AnnotatedDocument::new("", "", sofa, Provenance::NativeText, Script::Antiqua);
    let mut info_seen = false;
    let mut annotation: Option<&RawElement> = None;
    let mut lemma_ids = HashMap::new();
    let mut pos_ids = HashMap::new();
    let mut morph_ids = HashMap::new();
    let mut token_ids = HashMap::new();
    let mut token_refs = Vec::new();
    let mut dep_refs = Vec::new();

    for e in &elements {
        let id = e.text("xmi:id");
        match (e.ns.as_str(), e.local.as_str()) {
            (NS_TTLAB, "DocumentAnnotation") => annotation = Some(e),
            (NS_METADATA, "DocumentMetaData") => {
                e.span(sofa_len)?;
                doc.document_meta = DocumentMetaData {
                    language: e.text("language"),
                    document_title: e.text("documentTitle"),
                    document_id: e.text("documentId"),
                    document_uri: e.text("documentUri"),
                    document_base_uri: e.text("documentBaseUri"),
                    is_last_segment: e.get("isLastSegment") == Some("true"),
                };
            }
            (NS_PARLAGEST, "ProcessingInfo") => {
                info_seen = true;
                doc.document_id = e.text("documentId");
                doc.parliament = e.text("parliament");
                doc.provenance = parse_enum(e, "provenance")?;
                doc.script = parse_enum(e, "script")?;
            }
            (NS_PARLAGEST, "ProcessingNote") => doc.notes.push(e.text("value")),
            (NS_SEGMENTATION, "Sentence") => doc.sentences.push(e.span(sofa_len)?),
            (NS_SEGMENTATION, "Lemma") => {
                lemma_ids.insert(id, doc.lemmas.len());
                doc.lemmas.push(Lemma {
                    span: e.span(sofa_len)?,
                    value: e.text("value"),
                });
            }
            (NS_POS, _) => {
                pos_ids.insert(id, doc.pos_tags.len());
                doc.pos_tags.push(PosTag {
                    span: e.span(sofa_len)?,
                    value: e.text("PosValue"),
                });
            }
            (NS_MORPH, "MorphologicalFeatures") => {
                morph_ids.insert(id, doc.morph.len());
                doc.morph.push(MorphFeatures {
                    span: e.span(sofa_len)?,
                    gender: e.get("gender").map(str::to_string),
                    number: e.get("number").map(str::to_string),
                    case: e.get("case").map(str::to_string),
                    value: e.text("value"),
                });
            }
            (NS_SEGMENTATION, "Token") => {
                token_ids.insert(id, doc.tokens.len());
                let mut token = Token::new(e.span(sofa_len)?);
                token.order = e.opt_number("order")?.unwrap_or(0);
                doc.tokens.push(token);
                token_refs.push(e);
            }
            (NS_DEPENDENCY, _) => {
                doc.dependencies.push(Dependency {
                    span: e.span(sofa_len)?,
                    governor: 0,
                    dependent: 0,
                    dependency_type: e.text("DependencyType"),
                    flavor: e.text("flavor"),
                });
                dep_refs.push(e);
            }
            (NS_NER, _) => doc.entities.push(NamedEntity {
                span: e.span(sofa_len)?,
                label: e.text("value"),
            }),
            _ => {}
        }
    }

    let resolve = |map: &HashMap<String, usize>, e: &RawElement, attr: &str| -> Result<Option<usize>> {
        match e.get(attr) {
            None => Ok(None),
            Some(id) => map.get(id).copied().map(Some).ok_or_else(|| Error::XmiDanglingReference {
                attribute: attr.to_string(),
                id: id.to_string(),
            }),
        }
    };
    for (token, e) in doc.tokens.iter_mut().zip(&token_refs) {
        token.lemma = resolve(&lemma_ids, e, "lemma")?;
        token.pos = resolve(&pos_ids, e, "pos")?;
        token.morph = resolve(&morph_ids, e, "morph")?;
    }
    for (dep, e) in doc.dependencies.iter_mut().zip(&dep_refs) {
        e.required("Governor")?;
        e.required("Dependent")?;
        dep.governor = resolve(&token_ids, e, "Governor")?.expect("checked");
        dep.dependent = resolve(&token_ids, e, "Dependent")?.expect("checked");
    }

    if !info_seen {
        let id = &doc.document_meta.document_id;
        doc.document_id = id
            .strip_suffix(".xmi.gz")
            .or_else(|| id.strip_suffix(".xmi"))
            .unwrap_or(id)
            .to_string();
    }
    if let Some(a) = annotation {
        doc.metadata = Some(SessionMetadata {
            title: doc.document_meta.document_title.clone(),
            subtitle: a.text("subtitle"),
            date_day: a.number("dateDay")?,
            date_month: a.number("dateMonth")?,
            date_year: a.number("dateYear")?,
            timestamp_ms: a.number("timestamp")?,
        });
    }
    doc.validate()?;
    Ok(doc)
}
