//! Acceptance report: one line per criterion, non-zero exit on any failure.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ab_glyph::{point, Font, FontVec, PxScale, ScaleFont};
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;
use quick_xml::events::{BytesStart, Event};
use quick_xml::name::ResolveResult;
use quick_xml::NsReader;

use common::strategies::{arb_dictionary, arb_document, arb_queries, oracle_lookup};
use common::{write_manifest, Entry};
use parlagest::annotate::sidecar::{sofa_sha256, SidecarPayload};
use parlagest::annotate::{attach_external_annotations, segment, AttachOptions, Span};
use parlagest::corpus::{compute_corpus_stats, filter_subcorpus, SubcorpusFilter, STATS_HEADER};
use parlagest::imaging::{estimate_quality, Channels, PageImage, QualityClass, DEFAULT_DPI};
use parlagest::metadata::{date_from_timestamp, extract_metadata, timestamp_ms};
use parlagest::ocr::{compute_worker_budget, OcrEngine, OcrStrategy};
use parlagest::pdf::synth;
use parlagest::quality::{aggregate_reports, read_reports, FrequencyDictionary, QualityReport};
use parlagest::record::{Provenance, Script};
use parlagest::xmi::{from_xmi_str, to_xmi_string, write_xmi};
use parlagest::{run_pipeline, AnnotatedDocument, PipelineConfig};

const GOOD_QUALITY_TOLERANCE: f64 = 0.05;
const TABLE_BUDGET: Duration = Duration::from_secs(1);
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(10);
const SPELLCHECK_BUDGET: Duration = Duration::from_secs(30);
const OCR_BUDGET: Duration = Duration::from_secs(60);
const OCR_MIN_GOOD_QUALITY: f64 = 90.0;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
    /// Out of reach by construction; stated rather than tested.
    Acknowledged(String),
}

type Check = fn() -> Verdict;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn main() {
    let checks: &[(&str, &str, Check)] = &[
        ("PRIMARY", "quality metric reproduces the published good_quality column", table_consistency),
        ("PRIMARY", "session timestamps are exact UTC midnights", timestamps),
        ("PRIMARY", "XMI golden document matches after canonicalization", xmi_golden),
        ("PRIMARY", "XMI round trip over 500 random documents", xmi_round_trip),
        ("PRIMARY", "symmetric-delete lookup equals brute force", spellchecker_oracle),
        ("PRIMARY", "worker budget table", worker_budget),
        ("PRIMARY", "synthetic scan survives enhance, OCR and scoring", synthetic_ocr),
        ("PRIMARY", "subcorpus partition law", subcorpus_partition),
        ("PRIMARY", "corpus-scale figures", corpus_scale),
        ("SECONDARY", "sidecar payload structure and attachment", sidecar_laws),
    ];
    let mut failed = 0;
    for (tier, name, check) in checks {
        let verdict = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|p| Verdict::Fail(format!("panicked: {}", panic_message(&p))));
        let (status, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Skip(d) => ("SKIP", d),
            Verdict::Acknowledged(d) => ("ACK ", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{status} [{tier}] {name}: {detail}");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

/// (parliament, good_quality, right, unknown, wrong), percent.
const TABLE: [(&str, f64, f64, f64, f64); 13] = [
    ("Baden-Württemberg", 93.15, 87.52, 6.05, 6.43),
    ("Bayern", 89.92, 86.60, 3.70, 9.70),
    ("Bremen", 94.05, 88.73, 5.66, 5.62),
    ("Bundesrat", 94.53, 86.60, 8.39, 5.02),
    ("Hessen", 94.48, 88.86, 5.95, 5.19),
    ("Mecklenburg-Vorpommern", 95.01, 88.44, 6.92, 4.64),
    ("Niedersachsen", 94.70, 88.56, 6.47, 4.96),
    ("Nordrhein-Westfalen", 95.10, 89.18, 6.23, 4.59),
    ("Nationalrat Österreich", 88.56, 85.15, 3.84, 11.01),
    ("Rheinland-Pfalz", 94.34, 88.30, 6.41, 5.30),
    ("Saarland", 95.05, 89.44, 5.91, 4.65),
    ("Sachsen", 95.54, 89.17, 6.67, 4.16),
    ("Thüringen", 94.21, 87.61, 7.01, 5.38),
];

fn table_consistency() -> Verdict {
    let start = Instant::now();
    // Counts per 10,000 checked tokens, spread over three protocols per
    // parliament so the per-parliament figure comes from aggregation.
    let mut reports = Vec::new();
    for (name, _, right, unknown, wrong) in TABLE {
        let counts = [right, wrong, unknown].map(|p| (p * 100.0).round() as u64);
        for part in 0..3u64 {
            let share = |n: u64| n / 3 + u64::from(part < n % 3);
            reports.push(QualityReport::from_counts(
                format!("{name}#{part}"),
                0,
                share(counts[0]),
                share(counts[1]),
                share(counts[2]),
            ));
        }
    }
    let grouped = aggregate_reports(&reports, |r| r.key.split('#').next().unwrap().to_string());
    let elapsed = start.elapsed();
    let published: BTreeMap<&str, f64> = TABLE.iter().map(|r| (r.0, r.1)).collect();
    let mut worst = (0.0f64, String::new());
    let mut misses = Vec::new();
    for r in &grouped {
        let want = published[r.key.as_str()];
        let got = r.good_quality.unwrap();
        let dev = (got - want).abs();
        if dev > worst.0 {
            worst = (dev, r.key.clone());
        }
        if dev > GOOD_QUALITY_TOLERANCE + 1e-9 {
            misses.push(format!("{} {got:.2} vs {want:.2}", r.key));
        }
    }
    ensure(
        grouped.len() == 13 && misses.is_empty() && elapsed < TABLE_BUDGET,
        format!(
            "{}/13 rows within ±{GOOD_QUALITY_TOLERANCE}, max deviation {:.2} ({}), {:?} (budget {:?}){}",
            grouped.len() - misses.len(),
            worst.0,
            worst.1,
            elapsed,
            TABLE_BUDGET,
            if misses.is_empty() { String::new() } else { format!("; off: {}", misses.join(", ")) }
        ),
    )
}

fn timestamps() -> Verdict {
    let exact = timestamp_ms(11, 5, 2021).unwrap();
    // Independent day count from the proleptic Gregorian rules.
    let leap = |y: i64| (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    let lengths = |y: i64| [31, if leap(y) { 29 } else { 28 }, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
    let mut day: i64 = -(1946..1970).map(|y| if leap(y) { 366 } else { 365 }).sum::<i64>();
    let mut dates = 0;
    let mut wrong = Vec::new();
    for y in 1946..=2021i64 {
        for (m, len) in lengths(y).into_iter().enumerate() {
            for d in 1..=len {
                let (d, m, y32) = (d as u32, m as u32 + 1, y as i32);
                let ts = timestamp_ms(d, m, y32).unwrap();
                if ts != day * 86_400_000 || date_from_timestamp(ts) != Some((d, m, y32)) {
                    wrong.push(format!("{d}.{m}.{y}"));
                }
                day += 1;
                dates += 1;
            }
        }
    }
    ensure(
        exact == 1_620_691_200_000 && wrong.is_empty() && dates == 27_759,
        format!(
            "11.05.2021 -> {exact} (want 1620691200000); {dates} dates 1946-2021 round-trip, {} mismatches",
            wrong.len()
        ),
    )
}

const FIGURE_SENTENCE: &str = "Alterspräsident Winfried Kretschmann: Meine sehr verehrten Damen und Herren, liebe Kolleginnen und Kollegen!";
const FIGURE_PARLIAMENT: &str = "Landtag von Baden-Württemberg";
const FIGURE_ID: &str = "Plenarprotokoll_17_1_11.05.2021_S._1-13";
const SENTENCE_BEGIN: usize = 2733;

/// Surface form, lemma and STTS tag of each token in the sentence.
const FIGURE_TOKENS: [(&str, &str, &str); 16] = [
    ("Alterspräsident", "Alterspräsident", "NN"),
    ("Winfried", "Winfried", "NE"),
    ("Kretschmann", "Kretschmann", "NE"),
    (":", ":", "$."),
    ("Meine", "Meine", "PPOSAT"),
    ("sehr", "sehr", "ADV"),
    ("verehrten", "verehren", "ADJA"),
    ("Damen", "Dame", "NN"),
    ("und", "und", "KON"),
    ("Herren", "Herr", "NN"),
    (",", ",", "$,"),
    ("liebe", "lieb", "ADJA"),
    ("Kolleginnen", "Kollegin", "NN"),
    ("und", "und", "KON"),
    ("Kollegen", "Kollege", "NN"),
    ("!", "!", "$."),
];

fn figure_sofa() -> String {
    let mut prefix =
        String::from("Landtag von Baden-Württemberg\n17. Wahlperiode\nPlenarprotokoll 17 / 1\n11. Mai 2021\n\nBeginn: 10:00 Uhr.\n");
    while prefix.chars().count() < SENTENCE_BEGIN - 1 {
        prefix.push(' ');
    }
    format!("{prefix}\n{FIGURE_SENTENCE}\n")
}

fn figure_payload(sofa: &str, spans: &[Span]) -> String {
    let value = |i: usize, v: &str| format!(r#"{{"begin":{},"end":{},"value":"{v}"}}"#, spans[i].begin, spans[i].end);
    let lemmas: Vec<String> = FIGURE_TOKENS.iter().enumerate().map(|(i, t)| value(i, t.1)).collect();
    let pos: Vec<String> = FIGURE_TOKENS.iter().enumerate().map(|(i, t)| value(i, t.2)).collect();
    let morph: Vec<String> = [1, 2]
        .iter()
        .map(|&i| {
            format!(
                r#"{{"begin":{},"end":{},"features":{{"Gender":"Masc","Number":"Sing","Case":"Nom"}}}}"#,
                spans[i].begin, spans[i].end
            )
        })
        .collect();
    let deps: Vec<String> = [0, 1]
        .iter()
        .map(|&i| {
            format!(
                r#"{{"begin":{b},"end":{e},"governor":[{gb},{ge}],"dependent":[{b},{e}],"type":"PNC"}}"#,
                b = spans[i].begin,
                e = spans[i].end,
                gb = spans[2].begin,
                ge = spans[2].end
            )
        })
        .collect();
    format!(
        r#"{{"document_id":"{FIGURE_ID}","sofa_sha256":"{}","layers":{{"lemmas":[{}],"pos":[{}],"morph":[{}],"dependencies":[{}]}}}}"#,
        sofa_sha256(sofa),
        lemmas.join(","),
        pos.join(","),
        morph.join(","),
        deps.join(",")
    )
}

/// Natively segmented document restricted to the sentence, with metadata
/// from the file name and its first page.
fn figure_document() -> AnnotatedDocument {
    let sofa = figure_sofa();
    let mut doc = AnnotatedDocument::new(FIGURE_ID, FIGURE_PARLIAMENT, sofa.clone(), Provenance::NativeText, Script::Antiqua);
    let (sentences, tokens) = segment(&sofa);
    let sentence = Span::new(SENTENCE_BEGIN, SENTENCE_BEGIN + FIGURE_SENTENCE.chars().count());
    assert!(sentences.contains(&sentence), "segmenter finds the sentence at {sentence}");
    doc.sentences = vec![sentence];
    doc.tokens = tokens.into_iter().filter(|t| sentence.contains(&t.span)).collect();
    let meta = extract_metadata(&sofa, FIGURE_ID, FIGURE_PARLIAMENT).unwrap();
    doc.document_meta.document_title = meta.title.clone();
    doc.document_meta.document_id = format!("{FIGURE_ID}.xmi.gz");
    doc.document_meta.document_base_uri = "file:/resources/corpora/parlamentary_germany/".into();
    doc.document_meta.document_uri = format!(
        "file:/resources/corpora/parlamentary_germany/BadenWuertemberg/xmi/17/{FIGURE_ID}.xmi.gz"
    );
    doc.metadata = Some(meta);
    doc
}

const REFERENCE_ATTRS: [&str; 8] = ["xmi:id", "sofa", "lemma", "pos", "morph", "Governor", "Dependent", "members"];

/// Canonical line-per-element form: namespace URIs instead of prefixes,
/// sorted attributes, whitespace-only text dropped, and xmi:ids renumbered
/// in order of first appearance.
fn canonical_xml(xml: &str) -> String {
    let mut reader = NsReader::from_str(xml);
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut out = String::new();
    let renumber = |raw: &str, ids: &mut HashMap<String, usize>| {
        raw.split_whitespace()
            .map(|id| {
                let n = ids.len();
                ids.entry(id.to_string()).or_insert(n).to_string()
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let element = |reader: &NsReader<&[u8]>, e: &BytesStart, ids: &mut HashMap<String, usize>| {
        let (ns, local) = reader.resolve_element(e.name());
        let ns = match ns {
            ResolveResult::Bound(ns) => String::from_utf8_lossy(ns.as_ref()).into_owned(),
            _ => String::new(),
        };
        let mut attrs = Vec::new();
        for attr in e.attributes() {
            let attr = attr.unwrap();
            if attr.key.as_ref().starts_with(b"xmlns") {
                continue;
            }
            let (ans, alocal) = reader.resolve_attribute(attr.key);
            let alocal = String::from_utf8_lossy(alocal.as_ref()).into_owned();
            let key = match ans {
                ResolveResult::Bound(ns) if ns.as_ref() == b"http://www.omg.org/XMI" => format!("xmi:{alocal}"),
                ResolveResult::Bound(ns) => format!("{{{}}}{alocal}", String::from_utf8_lossy(ns.as_ref())),
                _ => alocal,
            };
            let value = attr.decode_and_unescape_value(reader.decoder()).unwrap().into_owned();
            attrs.push((key, value));
        }
        // References are renumbered in document order, before sorting.
        for (k, v) in attrs.iter_mut() {
            if REFERENCE_ATTRS.contains(&k.as_str()) {
                *v = renumber(v, ids);
            }
        }
        attrs.sort();
        let mut line = format!("{{{ns}}}{}", String::from_utf8_lossy(local.as_ref()));
        for (k, v) in attrs {
            line.push_str(&format!(" {k}={v:?}"));
        }
        line
    };
    loop {
        match reader.read_event().unwrap() {
            Event::Start(e) => {
                let line = element(&reader, &e, &mut ids);
                out.push_str(&line);
                out.push_str(" {\n");
            }
            Event::Empty(e) => {
                let line = element(&reader, &e, &mut ids);
                out.push_str(&line);
                out.push('\n');
            }
            Event::End(_) => out.push_str("}\n"),
            Event::Text(t) => {
                let t = t.decode().unwrap();
                if !t.trim().is_empty() {
                    out.push_str(&format!("text {:?}\n", t.as_ref()));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    out
}

fn xmi_golden() -> Verdict {
    let sofa = figure_sofa();
    let base = figure_document();
    let spans: Vec<Span> = base.tokens.iter().map(|t| t.span).collect();
    let payload = SidecarPayload::from_json(&figure_payload(&sofa, &spans)).unwrap();
    let doc = attach_external_annotations(&base, &payload, AttachOptions::default()).unwrap();
    let emitted = to_xmi_string(&doc).unwrap();
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/figure4.xmi")).unwrap();
    let (a, b) = (canonical_xml(&emitted), canonical_xml(&golden));
    let mut problems = Vec::new();
    if a != b {
        let diff = a.lines().zip(b.lines()).find(|(x, y)| x != y);
        problems.push(format!("canonical forms differ, first at {diff:?}"));
    }
    for needle in [
        r#"dateDay="11""#,
        r#"dateMonth="5""#,
        r#"dateYear="2021""#,
        r#"subtitle="17.Wahlperiode__1.Sitzung""#,
        r#"timestamp="1620691200000""#,
        r#"begin="2733" end="2748" value="Alterspräsident""#,
        r#"value="Case=Nom|Gender=Masc|Number=Sing""#,
    ] {
        if !emitted.contains(needle) {
            problems.push(format!("missing {needle}"));
        }
    }
    if from_xmi_str(&golden).map(|g| g != doc).unwrap_or(true) {
        problems.push("golden file does not read back as the fixture document".into());
    }
    if problems.is_empty() {
        Verdict::Pass(format!(
            "{} canonical lines identical; DocumentAnnotation, Lemma [2733,2748) and morphology present",
            a.lines().count()
        ))
    } else {
        Verdict::Fail(problems.join("; "))
    }
}

fn xmi_round_trip() -> Verdict {
    let mut runner = TestRunner::deterministic();
    let strategy = arb_document();
    let docs: Vec<AnnotatedDocument> = (0..500).map(|_| strategy.new_tree(&mut runner).unwrap().current()).collect();
    let largest = docs.iter().map(|d| d.tokens.len()).max().unwrap_or(0);
    let start = Instant::now();
    let mut mismatches = 0;
    for d in &docs {
        let xml = to_xmi_string(d).unwrap();
        if from_xmi_str(&xml).ok().as_ref() != Some(d) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(
        mismatches == 0 && largest <= 20 && elapsed < ROUND_TRIP_BUDGET,
        format!("500 documents (≤ {largest} tokens), {mismatches} mismatches, {elapsed:?} (budget {ROUND_TRIP_BUDGET:?})"),
    )
}

fn spellchecker_oracle() -> Verdict {
    let mut runner = TestRunner::deterministic();
    let strategy = arb_dictionary().prop_flat_map(|w| (proptest::strategy::Just(w.clone()), arb_queries(w)));
    let start = Instant::now();
    let (mut queries, mut mismatches, mut largest) = (0, Vec::new(), 0);
    for _ in 0..50 {
        let (words, qs) = strategy.new_tree(&mut runner).unwrap().current();
        largest = largest.max(words.len());
        let dict = FrequencyDictionary::from_entries(words.iter().map(|(w, f)| (w.as_str(), *f))).unwrap();
        for q in &qs {
            queries += 1;
            let got = dict.lookup(q).map(|s| (s.term, s.distance, s.frequency));
            if got != oracle_lookup(&words, q, 2) {
                mismatches.push(q.clone());
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(
        mismatches.is_empty() && queries == 1000 && largest <= 200 && elapsed < SPELLCHECK_BUDGET,
        format!(
            "50 dictionaries (≤ {largest} words) x 20 queries, {} mismatches{}, {elapsed:?} (budget {SPELLCHECK_BUDGET:?})",
            mismatches.len(),
            mismatches.first().map(|q| format!(" e.g. {q:?}")).unwrap_or_default()
        ),
    )
}

fn worker_budget() -> Verdict {
    use OcrStrategy::*;
    let table = [
        (16, FourCoreFewJobs, 4),
        (4, FourCoreFewJobs, 1),
        (1, FourCoreFewJobs, 1),
        (6, FourCoreFewJobs, 2),
        (16, OneCoreManyJobs, 16),
    ];
    let rows: Vec<String> = table
        .iter()
        .map(|&(t, s, want)| {
            let got = compute_worker_budget(t, s).unwrap().parallel_jobs;
            format!("({t}, {s}) -> {got}{}", if got == want { String::new() } else { format!(" want {want}") })
        })
        .collect();
    ensure(!rows.iter().any(|r| r.contains("want")), rows.join(", "))
}

const OCR_PARAGRAPHS: [&str; 3] = [
    "Meine sehr verehrten Damen und Herren, ich eröffne die Sitzung des Landtags. Die Tagesordnung liegt Ihnen vor. Wir beginnen mit der Beratung des Gesetzentwurfs der Landesregierung.",
    "Der Ausschuss hat den Antrag in seiner letzten Sitzung beraten und empfiehlt dem Haus, ihn anzunehmen. Wer dem Antrag zustimmen möchte, den bitte ich um das Handzeichen.",
    "Damit ist der Antrag mit großer Mehrheit angenommen. Ich danke Ihnen für die Aufmerksamkeit und schließe die heutige Sitzung. Die nächste Sitzung findet am Donnerstag statt.",
];

fn font_path() -> Option<PathBuf> {
    std::env::var_os("PARLAGEST_TEST_FONT")
        .map(PathBuf::from)
        .into_iter()
        .chain(
            ["DejaVuSerif.ttf", "DejaVuSans.ttf"]
                .iter()
                .map(|f| Path::new("/usr/share/fonts/truetype/dejavu").join(f)),
        )
        .find(|p| p.is_file())
}

/// A4 page at 300 dpi: 12 pt text, wrapped to 2.5 cm margins, with salt
/// and pepper noise on `noise_permille` of the pixels.
fn render_page(font: &FontVec, noise_permille: u32) -> PageImage {
    let (w, h) = (2480usize, 3508usize);
    let mut pixels = vec![255u8; w * h];
    let scale = PxScale::from(50.0);
    let scaled = font.as_scaled(scale);
    let margin = 295.0;
    let line_height = scaled.height() + scaled.line_gap() + 12.0;
    let mut baseline = margin + scaled.ascent();
    let width_of = |word: &str| word.chars().map(|c| scaled.h_advance(font.glyph_id(c))).sum::<f32>();
    let space = scaled.h_advance(font.glyph_id(' '));
    for paragraph in OCR_PARAGRAPHS {
        let mut x = margin;
        for word in paragraph.split(' ') {
            if x > margin && x + width_of(word) > w as f32 - margin {
                x = margin;
                baseline += line_height;
            }
            for c in word.chars() {
                let glyph = font.glyph_id(c).with_scale_and_position(scale, point(x, baseline));
                x += scaled.h_advance(glyph.id);
                if let Some(outline) = font.outline_glyph(glyph) {
                    let bounds = outline.px_bounds();
                    outline.draw(|gx, gy, coverage| {
                        let (px, py) = (bounds.min.x as i64 + gx as i64, bounds.min.y as i64 + gy as i64);
                        if (0..w as i64).contains(&px) && (0..h as i64).contains(&py) {
                            let p = &mut pixels[py as usize * w + px as usize];
                            *p = (*p).min(255 - (coverage.clamp(0.0, 1.0) * 255.0) as u8);
                        }
                    });
                }
            }
            x += space;
        }
        baseline += 2.0 * line_height;
    }
    let mut state = 0x2545_f491_4f6c_dd1du64;
    for p in pixels.iter_mut() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        let roll = (state % 1000) as u32;
        if roll < noise_permille {
            *p = if state & 1 << 40 == 0 { 0 } else { 255 };
        }
    }
    PageImage::new("synthetic", 0, w as u32, h as u32, Channels::Gray, DEFAULT_DPI, pixels).unwrap()
}

fn synthetic_ocr() -> Verdict {
    let Some(font) = font_path() else {
        return Verdict::Skip("no TrueType font found; set PARLAGEST_TEST_FONT".into());
    };
    let font = FontVec::try_from_vec(fs::read(font).unwrap()).unwrap();
    let page = render_page(&font, 8);
    if estimate_quality(&page) != QualityClass::Poor {
        return Verdict::Fail("salt-and-pepper page is not detected as a poor scan".into());
    }
    let engine = std::env::var("PARLAGEST_OCR_ENGINE").unwrap_or_else(|_| "tesseract".into());
    if OcrEngine::locate(&engine, Vec::new()).is_err() {
        return Verdict::Skip(format!(
            "OCR engine `{engine}` not installed; rendered page flagged as poor scan, OCR not run"
        ));
    }

    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let pdf = root.join("synthetic.pdf");
    fs::write(&pdf, synth::image_pdf(&[Some(&page)])).unwrap();
    write_manifest(
        &root.join("manifest.csv"),
        &[Entry {
            id: "synthetic_1_1_03.03.1950",
            parliament: "Bayern",
            locator: pdf,
            format: "unknown",
            script: "antiqua",
            quality: "unknown",
        }],
    );
    let mut config = PipelineConfig::new(root.join("manifest.csv"), root.join("store"), root.join("out"));
    config.ocr_engine = engine;
    let start = Instant::now();
    let summary = match run_pipeline(&config) {
        Ok(s) => s,
        Err(e) => return Verdict::Fail(format!("pipeline error: {e}")),
    };
    let elapsed = start.elapsed();
    if !summary.failures.is_empty() {
        return Verdict::Fail(format!("document failed: {:?}", summary.failures));
    }
    let reports = read_reports(&root.join("out/quality_documents.csv")).unwrap();
    let good = reports.first().and_then(|r| r.good_quality).unwrap_or(0.0);
    ensure(
        summary.scanned == 1 && summary.pages_enhanced == 1 && good >= OCR_MIN_GOOD_QUALITY && elapsed < OCR_BUDGET,
        format!(
            "scanned {}, enhanced {}, good_quality {good:.2} (min {OCR_MIN_GOOD_QUALITY}), {elapsed:?} (budget {OCR_BUDGET:?})",
            summary.scanned, summary.pages_enhanced
        ),
    )
}

fn mixed_document(id: &str, provenance: Provenance, script: Script) -> AnnotatedDocument {
    let mut d = AnnotatedDocument::new(id, "Bayern", "Das Hohe Haus tagt. Die Sitzung ist eröffnet.", provenance, script);
    let (sentences, tokens) = segment(&d.sofa);
    d.sentences = sentences;
    d.tokens = tokens;
    d
}

fn subcorpus_partition() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    for (id, p, s) in [
        ("native", Provenance::NativeText, Script::Antiqua),
        ("ocr_antiqua", Provenance::Ocr, Script::Antiqua),
        ("ocr_fraktur", Provenance::Ocr, Script::Fraktur),
    ] {
        write_xmi(&mixed_document(id, p, s), dir.path(), true).unwrap();
    }
    let list = |f| filter_subcorpus(dir.path(), f).unwrap().paths;
    let (all, no_ocr, ocr_only, fraktur) = (
        list(SubcorpusFilter::All),
        list(SubcorpusFilter::NoOcr),
        list(SubcorpusFilter::OcrOnly),
        list(SubcorpusFilter::FrakturOnly),
    );
    let subset = fraktur.iter().all(|p| ocr_only.contains(p));
    ensure(
        no_ocr.len() + ocr_only.len() == all.len() && subset && (all.len(), no_ocr.len(), fraktur.len()) == (3, 1, 1),
        format!(
            "|no_ocr| {} + |ocr_only| {} = |all| {}; fraktur_only ({}) within ocr_only: {subset}",
            no_ocr.len(),
            ocr_only.len(),
            all.len(),
            fraktur.len()
        ),
    )
}

fn corpus_scale() -> Verdict {
    // The published totals need the full crawl; check the bookkeeping instead.
    let dir = tempfile::tempdir().unwrap();
    let docs: Vec<AnnotatedDocument> = (0..4)
        .map(|i| {
            let mut d = mixed_document(&format!("s{i}"), Provenance::NativeText, Script::Antiqua);
            d.parliament = if i % 2 == 0 { "Bundestag" } else { "Bayern" }.into();
            d
        })
        .collect();
    for d in &docs {
        write_xmi(d, dir.path(), false).unwrap();
    }
    let stats = compute_corpus_stats(dir.path()).unwrap();
    let header_ok = stats.to_csv().lines().next() == Some(STATS_HEADER.join(",").as_str());
    let tokens: u64 = stats.rows.iter().map(|r| r.tokens).sum();
    let sums_ok = stats.total_sessions() == 4 && tokens == docs.iter().map(|d| d.tokens.len() as u64).sum::<u64>();
    if header_ok && sums_ok {
        Verdict::Acknowledged(
            "not reproducible at desk scale (e.g. Bundestag 258,521,349 tokens); stats CSV column order and summation checked instead"
                .into(),
        )
    } else {
        Verdict::Fail(format!("stats bookkeeping broken: header ok {header_ok}, sums ok {sums_ok}"))
    }
}

fn sidecar_laws() -> Verdict {
    let sofa = format!("{FIGURE_SENTENCE}\n");
    let mut doc = AnnotatedDocument::new(FIGURE_ID, FIGURE_PARLIAMENT, sofa.clone(), Provenance::NativeText, Script::Antiqua);
    let (sentences, tokens) = segment(&sofa);
    doc.sentences = sentences;
    doc.tokens = tokens;
    let spans: Vec<Span> = doc.tokens.iter().map(|t| t.span).collect();
    if spans.len() != FIGURE_TOKENS.len() {
        return Verdict::Fail(format!("segmenter found {} tokens, expected 16", spans.len()));
    }
    let payload = match SidecarPayload::from_json(&figure_payload(&sofa, &spans)) {
        Ok(p) => p,
        Err(e) => return Verdict::Fail(format!("payload rejected by schema: {e}")),
    };
    let l = &payload.layers;
    let counts_ok = l.lemmas.len() == spans.len() && l.pos.len() == spans.len();
    let hash_ok = payload.sofa_sha256 == sofa_sha256(&sofa);
    let attached = attach_external_annotations(&doc, &payload, AttachOptions::default()).and_then(|d| d.validate().map(|_| d));
    ensure(
        counts_ok && hash_ok && attached.is_ok(),
        format!(
            "|lemmas| {} = |tokens| {} = |pos| {}, sofa hash matches: {hash_ok}, attached document valid: {}",
            l.lemmas.len(),
            spans.len(),
            l.pos.len(),
            attached.as_ref().map(|_| "yes".to_string()).unwrap_or_else(|e| e.to_string())
        ),
    )
}
