use proptest::prelude::*;

use parlagest::annotate::{Dependency, Lemma, MorphFeatures, NamedEntity, PosTag, Span, Token};
use parlagest::metadata::SessionMetadata;
use parlagest::record::{Provenance, Script};
use parlagest::AnnotatedDocument;

const SEPARATORS: [&str; 6] = [" ", " ", "\n", "\t", "  ", "\r\n"];
const POS: [&str; 6] = ["NN", "ADJA", "ART", "VVFIN", "$.", "NE"];
const DEPS: [&str; 5] = ["nsubj", "obj", "det", "amod", "punct"];
const MORPH: [&str; 5] = [
    "Case=Nom|Gender=Masc|Number=Sing",
    "Case=Dat|Number=Plur",
    "Gender=Fem",
    "Mood=Ind|Tense=Pres",
    "_",
];

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-zA-ZäöüßÄÖÜ]{1,9}",
        "[0-9]{1,4}",
        "[.,;:!?&<>\"'()]",
        "[a-z&<>\"']{1,4}",
        Just("𝔉raktur".to_string()),
        Just("Alterspräsident".to_string()),
    ]
}

fn value() -> impl Strategy<Value = String> {
    "[a-zA-Zä&<>\"' \t\n]{1,8}"
}

prop_compose! {
    fn token_part()(
        w in word(),
        sep in 0..SEPARATORS.len(),
        flags in any::<u8>(),
        lemma in value(),
        pos in 0..POS.len(),
        morph in 0..MORPH.len(),
        order in 0u32..3,
    ) -> (String, &'static str, u8, String, &'static str, &'static str, u32) {
        (w, SEPARATORS[sep], flags, lemma, POS[pos], MORPH[morph], order)
    }
}

prop_compose! {
    /// Small documents (≤ 20 tokens) that satisfy every document invariant.
    pub fn arb_document()(
        lead in 0usize..3,
        parts in prop::collection::vec(token_part(), 0..=20),
        cuts in prop::collection::vec(any::<bool>(), 20),
        deps in prop::collection::vec((any::<u8>(), any::<u8>(), 0..DEPS.len()), 0..6),
        ents in prop::collection::vec((any::<u8>(), 1usize..4, "[A-Z]{3,4}"), 0..3),
        date in (1u32..=28, 1u32..=12, 1946i32..=2021, prop::option::of((1u32..30, 1u32..300))),
        has_meta in any::<bool>(),
        ocr in any::<bool>(),
        fraktur in any::<bool>(),
        uri in prop::option::of("[a-z]{1,6}"),
        notes in prop::collection::vec("[a-z:0-9 &<]{1,10}", 0..2),
        id in "[A-Za-z0-9_.]{1,20}",
    ) -> AnnotatedDocument {
        build(lead, &parts, &cuts, &deps, &ents, date, has_meta, ocr, fraktur, uri, notes, id)
    }
}

#[allow(clippy::too_many_arguments)]
fn build(
    lead: usize,
    parts: &[(String, &'static str, u8, String, &'static str, &'static str, u32)],
    cuts: &[bool],
    deps: &[(u8, u8, usize)],
    ents: &[(u8, usize, String)],
    date: (u32, u32, i32, Option<(u32, u32)>),
    has_meta: bool,
    ocr: bool,
    fraktur: bool,
    uri: Option<String>,
    notes: Vec<String>,
    id: String,
) -> AnnotatedDocument {
    let mut sofa = " ".repeat(lead);
    let mut spans = Vec::new();
    let mut pos = lead;
    for (w, sep, ..) in parts {
        let len = w.chars().count();
        spans.push(Span::new(pos, pos + len));
        sofa.push_str(w);
        sofa.push_str(sep);
        pos += len + sep.chars().count();
    }
    let provenance = if ocr { Provenance::Ocr } else { Provenance::NativeText };
    let script = if fraktur { Script::Fraktur } else { Script::Antiqua };
    let mut doc = AnnotatedDocument::new(&id, "Landtag", sofa, provenance, script);

    let mut start = 0;
    for i in 0..spans.len() {
        if i + 1 == spans.len() || cuts[i] {
            doc.sentences.push(Span::new(spans[start].begin, spans[i].end));
            start = i + 1;
        }
    }
    for (span, (_, _, flags, lemma, tag, morph, order)) in spans.iter().zip(parts) {
        let mut t = Token::new(*span);
        t.order = *order;
        if flags & 1 != 0 {
            t.lemma = Some(doc.lemmas.len());
            doc.lemmas.push(Lemma { span: *span, value: lemma.clone() });
        }
        if flags & 2 != 0 {
            t.pos = Some(doc.pos_tags.len());
            doc.pos_tags.push(PosTag { span: *span, value: tag.to_string() });
        }
        if flags & 4 != 0 {
            t.morph = Some(doc.morph.len());
            doc.morph.push(MorphFeatures::from_value(*span, *morph).unwrap());
        }
        if flags & 8 != 0 {
            // A layer entry that no token points at.
            doc.lemmas.push(Lemma { span: *span, value: "frei".into() });
        }
        doc.tokens.push(t);
    }
    let n = doc.tokens.len();
    if n > 0 {
        for &(g, d, kind) in deps {
            let (g, d) = (g as usize % n, d as usize % n);
            let dependency_type = if g == d { "ROOT".to_string() } else { DEPS[kind].to_string() };
            doc.dependencies.push(Dependency {
                span: doc.tokens[d].span,
                governor: g,
                dependent: d,
                dependency_type,
                flavor: if kind % 2 == 0 { "basic".into() } else { "enhanced".into() },
            });
        }
        for (first, width, label) in ents {
            let a = *first as usize % n;
            let b = (a + width - 1).min(n - 1);
            doc.entities.push(NamedEntity {
                span: Span::new(doc.tokens[a].span.begin, doc.tokens[b].span.end),
                label: label.clone(),
            });
        }
    }
    if has_meta {
        let (d, m, y, ls) = date;
        let meta = SessionMetadata::new("Landtag", d, m, y, ls.map(|x| x.0), ls.map(|x| x.1)).unwrap();
        doc.document_meta.document_title = meta.title.clone();
        doc.metadata = Some(meta);
    }
    if let Some(u) = uri {
        doc.document_meta.document_base_uri = format!("file:/corpus/{u}/");
        doc.document_meta.document_uri = format!("file:/corpus/{u}/{id}.xmi.gz");
    }
    doc.notes = notes;
    doc.validate().expect("generated document is valid");
    doc
}

/// Dictionary entries over a small alphabet so neighbours and ties are
/// common; words longer than the prefix length occur regularly.
pub fn arb_dictionary() -> impl Strategy<Value = Vec<(String, u64)>> {
    prop::collection::vec(("[abcdeäß]{1,11}", 1u64..6), 1..=200)
}

/// Queries: dictionary words with up to three random edits, fresh random
/// strings, and case variants.
pub fn arb_queries(words: Vec<(String, u64)>) -> impl Strategy<Value = Vec<String>> {
    let n = words.len();
    prop::collection::vec(
        prop_oneof![
            3 => (0..n, prop::collection::vec((0u8..4, any::<u8>(), "[abcdeäßx]"), 0..=3), any::<bool>())
                .prop_map(move |(i, edits, upper)| {
                    let mut w: Vec<char> = words[i].0.chars().collect();
                    for (kind, at, c) in edits {
                        let c = c.chars().next().unwrap();
                        let at = if w.is_empty() { 0 } else { at as usize % w.len() };
                        match kind {
                            0 if !w.is_empty() => { w.remove(at); }
                            1 => w.insert(at, c),
                            2 if !w.is_empty() => w[at] = c,
                            _ if w.len() > at + 1 => w.swap(at, at + 1),
                            _ => {}
                        }
                    }
                    let s: String = w.into_iter().collect();
                    if upper { s.to_uppercase() } else { s }
                }),
            1 => "[abcdeäßx]{0,13}",
        ],
        20,
    )
}

/// Optimal string alignment distance over the full matrix.
pub fn oracle_osa(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + sub);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                d[i][j] = d[i][j].min(d[i - 2][j - 2] + 1);
            }
        }
    }
    d[a.len()][b.len()]
}

/// Linear scan: smallest distance, then highest frequency, then the
/// lexicographically smallest word.
pub fn oracle_lookup(words: &[(String, u64)], query: &str, max: usize) -> Option<(String, usize, u64)> {
    let mut merged: std::collections::BTreeMap<String, u64> = Default::default();
    for (w, f) in words {
        *merged.entry(w.to_lowercase()).or_default() += f;
    }
    let q = query.to_lowercase();
    merged
        .into_iter()
        .map(|(w, f)| (oracle_osa(&q, &w), f, w))
        .filter(|(d, ..)| *d <= max)
        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)))
        .map(|(d, f, w)| (w, d, f))
}
