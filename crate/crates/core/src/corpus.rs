//! Queries over a packaged corpus directory: subcorpus selection and
//! per-parliament statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::AnnotatedDocument;
use crate::error::{Error, Result};
use crate::manifest::closed_enum;
use crate::record::{Provenance, Script};
use crate::xmi::read_xmi;

closed_enum!(
    SubcorpusFilter {
        All => "all",
        NoOcr => "no_ocr",
        OcrOnly => "ocr_only",
        FrakturOnly => "fraktur_only",
    }
);

impl SubcorpusFilter {
    pub fn accepts(self, provenance: Provenance, script: Script) -> bool {
        match self {
            SubcorpusFilter::All => true,
            SubcorpusFilter::NoOcr => provenance == Provenance::NativeText,
            SubcorpusFilter::OcrOnly => provenance == Provenance::Ocr,
            SubcorpusFilter::FrakturOnly => provenance == Provenance::Ocr && script == Script::Fraktur,
        }
    }
}

/// Packaged XMI files below `dir`, sorted by path. A missing directory is
/// an empty corpus.
pub fn list_xmi_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    if dir.exists() {
        walk(dir, &mut out)?;
    }
    out.sort();
    Ok(out)
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            walk(&path, out)?;
        } else if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
            if name.ends_with(".xmi") || name.ends_with(".xmi.gz") {
                out.push(path);
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unreadable {
    pub path: PathBuf,
    pub cause: String,
}

/// Readable documents with their paths, plus the files that failed.
pub type CorpusScan = (Vec<(PathBuf, AnnotatedDocument)>, Vec<Unreadable>);

/// Reads every packaged document; failures are reported, not fatal.
pub fn scan_corpus(dir: &Path) -> Result<CorpusScan> {
    let files = list_xmi_files(dir)?;
    let results: Vec<_> = files
        .into_par_iter()
        .map(|path| {
            let doc = read_xmi(&path);
            (path, doc)
        })
        .collect();
    let mut docs = Vec::new();
    let mut unreadable = Vec::new();
    for (path, doc) in results {
        match doc {
            Ok(doc) => docs.push((path, doc)),
            Err(e) => unreadable.push(Unreadable {
                path,
                cause: e.to_string(),
            }),
        }
    }
    Ok((docs, unreadable))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subcorpus {
    pub paths: Vec<PathBuf>,
    pub unreadable: Vec<Unreadable>,
}

pub fn filter_subcorpus(corpus_dir: &Path, filter: SubcorpusFilter) -> Result<Subcorpus> {
    let (docs, unreadable) = scan_corpus(corpus_dir)?;
    Ok(Subcorpus {
        paths: docs
            .into_iter()
            .filter(|(_, d)| filter.accepts(d.provenance, d.script))
            .map(|(p, _)| p)
            .collect(),
        unreadable,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub parliament: String,
    pub sessions: u64,
    pub sentences: u64,
    pub tokens: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Sorted by parliament.
    pub rows: Vec<StatsRow>,
    pub unreadable: Vec<Unreadable>,
}

pub const STATS_HEADER: [&str; 4] = ["parliament", "sessions", "sentences", "tokens"];

impl CorpusStats {
    pub fn from_documents<'a, I>(docs: I) -> Self
    where
        I: IntoIterator<Item = &'a AnnotatedDocument>,
    {
        let mut rows: BTreeMap<&str, StatsRow> = BTreeMap::new();
        for d in docs {
            let row = rows.entry(&d.parliament).or_insert_with(|| StatsRow {
                parliament: d.parliament.clone(),
                ..Default::default()
            });
            row.sessions += 1;
            row.sentences += d.sentences.len() as u64;
            row.tokens += d.tokens.len() as u64;
        }
        CorpusStats {
            rows: rows.into_values().collect(),
            unreadable: Vec::new(),
        }
    }

    pub fn total_sessions(&self) -> u64 {
        self.rows.iter().map(|r| r.sessions).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(STATS_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.parliament.clone(),
                r.sessions.to_string(),
                r.sentences.to_string(),
                r.tokens.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Fixed-width table: parliament left-aligned, counts right-aligned.
    pub fn to_table(&self) -> String {
        let cells: Vec<[String; 4]> = std::iter::once(STATS_HEADER.map(String::from))
            .chain(self.rows.iter().map(|r| {
                [
                    r.parliament.clone(),
                    r.sessions.to_string(),
                    r.sentences.to_string(),
                    r.tokens.to_string(),
                ]
            }))
            .collect();
        let mut widths = [0usize; 4];
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let mut out = String::new();
        for row in &cells {
            let _ = write!(out, "{:<w$}", row[0], w = widths[0]);
            for i in 1..4 {
                let _ = write!(out, "  {:>w$}", row[i], w = widths[i]);
            }
            out.push('\n');
        }
        out
    }
}

pub fn compute_corpus_stats(corpus_dir: &Path) -> Result<CorpusStats> {
    let (docs, unreadable) = scan_corpus(corpus_dir)?;
    let mut stats = CorpusStats::from_documents(docs.iter().map(|(_, d)| d));
    stats.unreadable = unreadable;
    Ok(stats)
}
