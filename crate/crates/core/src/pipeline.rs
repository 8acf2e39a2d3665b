//! Stage orchestration with per-document failure isolation.
//!
//! Every stage reads and writes plain files, so stages can be run one at a
//! time from the command line or all together through [`run_pipeline`]:
//!
//! * `<store>/records.json`: document records and their lifecycle state
//! * `<store>/<parliament>/<id>.pdf`: fetched source
//! * `<store>/<parliament>/<id>.txt`: raw text from OCR or native extraction
//! * `<store>/<parliament>/<id>.annotated.json`: annotated document
//! * `<out>/<parliament>/xmi/<legislature>/<id>.xmi.gz`: packaged corpus
//! * `<out>/failures.csv`, `<out>/quality_documents.csv`,
//!   `<out>/quality_parliaments.csv`: ledgers and reports

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annotate::sidecar::SidecarPayload;
use crate::annotate::{
    attach_external_annotations, extract_native_text, normalize_text, AnnotatedDocument, AttachOptions,
    Segmenter,
};
use crate::error::{Error, Result};
use crate::fetch::{fetch_documents, parliament_dir, FetchOptions};
use crate::imaging::{debug_page_path, enhance_image, split_scan_quality, DEFAULT_DPI};
use crate::manifest::{closed_enum, load_manifest, FormatHint, SourceManifest};
use crate::metadata::extract_metadata;
use crate::ocr::{compute_worker_budget, OcrEngine, OcrJob, OcrStrategy, WorkerBudget, PAGE_SEPARATOR};
use crate::pdf::{classify_document, rasterize_pages, DEFAULT_READABLE_THRESHOLD};
use crate::quality::{aggregate_reports, score_document, write_reports, FrequencyDictionary, QualityReport};
use crate::record::{Classification, DocumentRecord, State};
use crate::xmi::{package_dir, write_xmi, xmi_file_name};

closed_enum!(
    Stage {
        Fetch => "fetch",
        Classify => "classify",
        Rasterize => "rasterize",
        Enhance => "enhance",
        Ocr => "ocr",
        Extract => "extract",
        Annotate => "annotate",
        Metadata => "metadata",
        Package => "package",
        Quality => "quality",
    }
);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageFailure {
    pub id: String,
    pub stage: Stage,
    pub cause: String,
}

impl StageFailure {
    pub fn new(id: impl Into<String>, stage: Stage, cause: &Error) -> Self {
        StageFailure {
            id: id.into(),
            stage,
            cause: cause.to_string(),
        }
    }
}

/// Engine name that disables OCR; scanned documents then fail individually.
pub const OCR_ENGINE_NONE: &str = "none";

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub manifest_path: PathBuf,
    pub store_path: PathBuf,
    pub out_path: PathBuf,
    pub dpi: u32,
    pub ocr_engine: String,
    pub ocr_engine_args: Vec<String>,
    pub ocr_strategy: OcrStrategy,
    pub total_threads: usize,
    /// Shipped German list when `None`.
    pub dictionary_path: Option<PathBuf>,
    pub keep_images: bool,
    pub gzip: bool,
    pub readable_threshold: f64,
    /// Directory of `<id>.json` sidecar payloads.
    pub sidecar_dir: Option<PathBuf>,
    pub replace_segmentation: bool,
    /// Extra abbreviations for the sentence splitter.
    pub abbreviations_path: Option<PathBuf>,
    pub fetch: FetchOptions,
}

impl PipelineConfig {
    pub fn new(manifest_path: impl Into<PathBuf>, store_path: impl Into<PathBuf>, out_path: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            manifest_path: manifest_path.into(),
            store_path: store_path.into(),
            out_path: out_path.into(),
            dpi: DEFAULT_DPI,
            ocr_engine: "tesseract".into(),
            ocr_engine_args: Vec::new(),
            ocr_strategy: OcrStrategy::OneCoreManyJobs,
            total_threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
            dictionary_path: None,
            keep_images: false,
            gzip: true,
            readable_threshold: DEFAULT_READABLE_THRESHOLD,
            sidecar_dir: None,
            replace_segmentation: false,
            abbreviations_path: None,
            fetch: FetchOptions {
                delay: Duration::ZERO,
                timeout: Some(Duration::from_secs(120)),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, path) in [
            ("manifest", &self.manifest_path),
            ("store", &self.store_path),
            ("out", &self.out_path),
        ] {
            if path.as_os_str().is_empty() {
                return Err(Error::Config(format!("{name} path must not be empty")));
            }
        }
        if self.total_threads < 1 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        if self.dpi == 0 {
            return Err(Error::Config("--dpi must be positive".into()));
        }
        for (name, path) in [
            ("dictionary", &self.dictionary_path),
            ("abbreviation list", &self.abbreviations_path),
        ] {
            if let Some(p) = path {
                if !p.is_file() {
                    return Err(Error::Config(format!("{name} {} does not exist", p.display())));
                }
            }
        }
        if let Some(dir) = &self.sidecar_dir {
            if !dir.is_dir() {
                return Err(Error::Config(format!("sidecar directory {} does not exist", dir.display())));
            }
        }
        Ok(())
    }

    pub fn records_path(&self) -> PathBuf {
        self.store_path.join("records.json")
    }

    pub fn failures_path(&self) -> PathBuf {
        self.out_path.join("failures.csv")
    }

    pub fn text_path(&self, record: &DocumentRecord) -> PathBuf {
        self.doc_dir(record).join(format!("{}.txt", record.id))
    }

    pub fn annotated_path(&self, record: &DocumentRecord) -> PathBuf {
        self.doc_dir(record).join(format!("{}.annotated.json", record.id))
    }

    fn doc_dir(&self, record: &DocumentRecord) -> PathBuf {
        self.store_path.join(parliament_dir(&record.parliament))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub manifest_entries: usize,
    pub fetched: usize,
    pub bytes_transferred: u64,
    pub classified: usize,
    pub readable: usize,
    pub scanned: usize,
    pub pages_rasterized: usize,
    pub pages_enhanced: usize,
    pub ocr_documents: usize,
    pub native_documents: usize,
    pub annotated: usize,
    pub sidecar_attached: usize,
    pub metadata_missing: usize,
    pub packaged: usize,
    pub quality_reports: usize,
    pub failures: Vec<StageFailure>,
}

impl RunSummary {
    /// Human-readable multi-line summary for standard error.
    pub fn render(&self) -> String {
        let mut out = format!(
            "entries {}  fetched {}  classified {} ({} readable, {} scanned)\n\
             pages rasterized {}  enhanced {}  ocr documents {}  native documents {}\n\
             annotated {}  sidecar attached {}  metadata missing {}  packaged {}  quality reports {}\n\
             failures {}\n",
            self.manifest_entries,
            self.fetched,
            self.classified,
            self.readable,
            self.scanned,
            self.pages_rasterized,
            self.pages_enhanced,
            self.ocr_documents,
            self.native_documents,
            self.annotated,
            self.sidecar_attached,
            self.metadata_missing,
            self.packaged,
            self.quality_reports,
            self.failures.len(),
        );
        for f in &self.failures {
            out.push_str(&format!("  {} [{}] {}\n", f.id, f.stage, f.cause.replace('\n', " ")));
        }
        out
    }
}

/// Loads the manifest; I/O failures are reported as manifest errors.
pub fn read_manifest(path: &Path) -> Result<SourceManifest> {
    load_manifest(path).map_err(|e| match e {
        Error::Io { path, source } => Error::ManifestParse {
            line: 0,
            message: format!("cannot read {}: {source}", path.display()),
        },
        other => other,
    })
}

pub fn load_records(path: &Path) -> Result<Vec<DocumentRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
}

pub fn save_records(path: &Path, records: &[DocumentRecord]) -> Result<()> {
    write_atomic(path, serde_json::to_string_pretty(records).expect("records serialize").as_bytes())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let partial = path.with_extension("part");
    fs::write(&partial, bytes).map_err(|e| Error::io(&partial, e))?;
    fs::rename(&partial, path).map_err(|e| Error::io(path, e))
}

/// Appends failures to the `id,stage,cause` ledger, starting a fresh file
/// when `truncate` is set.
pub fn write_failure_ledger(path: &Path, failures: &[StageFailure], truncate: bool) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let fresh = truncate || !path.exists();
    let file = fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(!truncate)
        .truncate(truncate)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let fail = |e: csv::Error| Error::Invalid(format!("{}: {e}", path.display()));
    if fresh {
        w.write_record(["id", "stage", "cause"]).map_err(fail)?;
    }
    for f in failures {
        w.write_record([f.id.as_str(), f.stage.as_str(), f.cause.as_str()])
            .map_err(fail)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_failure_ledger(path: &Path) -> Result<Vec<StageFailure>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    r.records()
        .map(|row| {
            let row = row.map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
            Ok(StageFailure {
                id: row[0].to_string(),
                stage: row[1].parse()?,
                cause: row[2].to_string(),
            })
        })
        .collect()
}

/// Result of one stage over a batch of records.
/// Per-record result of a stage body, naming the stage that failed.
type StageResult = std::result::Result<(), (Stage, Error)>;

#[derive(Debug, Default)]
pub struct StageOutcome {
    pub records: Vec<DocumentRecord>,
    pub processed: usize,
    pub failures: Vec<StageFailure>,
}

pub struct Pipeline {
    config: PipelineConfig,
    segmenter: Segmenter,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        let segmenter = match &config.abbreviations_path {
            Some(p) => Segmenter::with_abbreviation_file(p)?,
            None => Segmenter::default(),
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.total_threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        Ok(Pipeline {
            config,
            segmenter,
            pool,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn worker_budget(&self) -> Result<WorkerBudget> {
        compute_worker_budget(self.config.total_threads, self.config.ocr_strategy)
    }

    /// Locates the OCR engine. `needed` says whether any document may
    /// require OCR; a missing engine is only fatal then.
    pub fn ocr_engine(&self, needed: bool) -> Result<Option<OcrEngine>> {
        if self.config.ocr_engine == OCR_ENGINE_NONE {
            return Ok(None);
        }
        match OcrEngine::locate(&self.config.ocr_engine, self.config.ocr_engine_args.clone()) {
            Ok(engine) => Ok(Some(engine)),
            Err(e) if needed => Err(e),
            Err(_) => Ok(None),
        }
    }

    pub fn dictionary(&self) -> Result<FrequencyDictionary> {
        match &self.config.dictionary_path {
            Some(p) => FrequencyDictionary::load(
                p,
                crate::quality::DEFAULT_MAX_EDIT_DISTANCE,
                crate::quality::DEFAULT_PREFIX_LENGTH,
            ),
            None => Ok(FrequencyDictionary::shipped()),
        }
    }

    /// Applies `f` to every eligible record on the worker pool; ineligible
    /// records pass through unchanged.
    fn map_records<E, F>(&self, records: Vec<DocumentRecord>, eligible: E, f: F) -> StageOutcome
    where
        E: Fn(&DocumentRecord) -> bool + Sync,
        F: Fn(&DocumentRecord) -> std::result::Result<DocumentRecord, (Stage, Error)> + Sync,
    {
        self.map_records_in(&self.pool, records, eligible, f)
    }

    fn map_records_in<E, F>(
        &self,
        pool: &rayon::ThreadPool,
        records: Vec<DocumentRecord>,
        eligible: E,
        f: F,
    ) -> StageOutcome
    where
        E: Fn(&DocumentRecord) -> bool + Sync,
        F: Fn(&DocumentRecord) -> std::result::Result<DocumentRecord, (Stage, Error)> + Sync,
    {
        let results: Vec<(DocumentRecord, Option<StageResult>)> = pool.install(|| {
            records
                .into_par_iter()
                .map(|r| {
                    if !eligible(&r) {
                        return (r, None);
                    }
                    match f(&r) {
                        Ok(next) => (next, Some(Ok(()))),
                        Err(e) => (r, Some(Err(e))),
                    }
                })
                .collect()
        });
        let mut outcome = StageOutcome::default();
        for (record, result) in results {
            match result {
                Some(Ok(())) => outcome.processed += 1,
                Some(Err((stage, e))) => {
                    log::warn!("{} failed at {stage}: {e}", record.id);
                    outcome.failures.push(StageFailure::new(&record.id, stage, &e));
                }
                None => {}
            }
            outcome.records.push(record);
        }
        outcome
    }

    pub fn fetch(&self, manifest: &SourceManifest) -> Result<(StageOutcome, u64)> {
        log::info!("fetching {} documents", manifest.len());
        let fetched = self
            .pool
            .install(|| fetch_documents(manifest, &self.config.store_path, &self.config.fetch))?;
        let mut order: Vec<DocumentRecord> = Vec::with_capacity(fetched.records.len());
        for entry in &manifest.entries {
            if let Some(r) = fetched.records.iter().find(|r| r.id == entry.id) {
                order.push(r.clone());
            }
        }
        Ok((
            StageOutcome {
                processed: order.len(),
                records: order,
                failures: fetched.failures,
            },
            fetched.bytes_transferred,
        ))
    }

    pub fn classify(&self, records: Vec<DocumentRecord>) -> StageOutcome {
        log::info!("classifying {} documents", records.len());
        let threshold = self.config.readable_threshold;
        self.map_records(
            records,
            |_| true,
            |r| {
                let fresh = DocumentRecord {
                    classification: None,
                    script: None,
                    page_count: None,
                    provenance: None,
                    state: State::Fetched,
                    ..r.clone()
                };
                classify_document(&fresh, threshold).map_err(|e| (Stage::Classify, e))
            },
        )
    }

    /// Produces `<id>.txt` for every classified record: OCR for scanned
    /// documents, text-layer extraction for readable ones.
    pub fn acquire_text(&self, records: Vec<DocumentRecord>, engine: Option<&OcrEngine>) -> Result<(StageOutcome, TextCounters)> {
        let counters = TextCounters::default();
        let budget = self.worker_budget()?;
        let ocr_pool = rayon::ThreadPoolBuilder::new()
            .num_threads(budget.parallel_jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build OCR pool: {e}")))?;
        log::info!(
            "text stage: {} OCR jobs in parallel, {} engine cores each",
            budget.parallel_jobs,
            budget.engine_cores_per_job
        );
        let classified = |r: &DocumentRecord| r.state >= State::Classified && r.classification.is_some();
        let is_scanned = |r: &DocumentRecord| r.classification == Some(Classification::Scanned);

        let native = self.map_records(
            records,
            |r| classified(r) && !is_scanned(r),
            |r| {
                let text = extract_native_text(r).map_err(|e| (Stage::Extract, e))?;
                self.store_text(r, &text).map_err(|e| (Stage::Extract, e))?;
                counters.native.fetch_add(1, Ordering::Relaxed);
                let mut next = r.clone();
                next.state = State::Extracted;
                Ok(next)
            },
        );
        let scanned = self.map_records_in(
            &ocr_pool,
            native.records,
            |r| classified(r) && is_scanned(r),
            |r| {
                let Some(engine) = engine else {
                    return Err((Stage::Ocr, Error::Config("no OCR engine available".into())));
                };
                let text = self.ocr_document(r, engine, &budget, &counters)?;
                self.store_text(r, &text).map_err(|e| (Stage::Ocr, e))?;
                counters.ocr.fetch_add(1, Ordering::Relaxed);
                let mut next = r.clone();
                next.state = State::Extracted;
                Ok(next)
            },
        );
        let mut failures = native.failures;
        failures.extend(scanned.failures);
        Ok((
            StageOutcome {
                records: scanned.records,
                processed: native.processed + scanned.processed,
                failures,
            },
            counters,
        ))
    }

    fn ocr_document(
        &self,
        record: &DocumentRecord,
        engine: &OcrEngine,
        budget: &WorkerBudget,
        counters: &TextCounters,
    ) -> std::result::Result<String, (Stage, Error)> {
        let mut rec = record.clone();
        rec.state = State::Classified;
        let (_, pages) = rasterize_pages(&rec, self.config.dpi).map_err(|(_, e)| (Stage::Rasterize, e))?;
        counters.rasterized.fetch_add(pages.len(), Ordering::Relaxed);
        let (good, poor) = split_scan_quality(pages, record.scan_quality_hint);
        let mut ready = good;
        for page in &poor {
            ready.push(enhance_image(page).map_err(|e| (Stage::Enhance, e))?);
            counters.enhanced.fetch_add(1, Ordering::Relaxed);
        }
        ready.sort_by_key(|p| p.page_index);
        if self.config.keep_images {
            for page in &ready {
                let path = debug_page_path(&self.config.store_path, &parliament_dir(&record.parliament), &record.id, page.page_index);
                page.save_png(&path).map_err(|e| (Stage::Rasterize, e))?;
            }
        }
        let script = record.script.unwrap_or_else(|| record.script_hint.resolve());
        let job = OcrJob::new(&record.id, ready, script, budget.engine_cores_per_job);
        let output = engine.run(&job).map_err(|e| (Stage::Ocr, e))?;
        Ok(output.text())
    }

    fn store_text(&self, record: &DocumentRecord, text: &str) -> Result<()> {
        write_atomic(&self.config.text_path(record), text.as_bytes())
    }

    /// Builds the annotated document for one record from its stored text.
    pub fn annotate_record(&self, record: &DocumentRecord) -> std::result::Result<(AnnotatedDocument, bool), (Stage, Error)> {
        let path = self.config.text_path(record);
        let raw = fs::read_to_string(&path).map_err(|e| (Stage::Annotate, Error::io(&path, e)))?;
        let normalized = normalize_text(&raw);
        let provenance = record
            .provenance
            .ok_or_else(|| (Stage::Annotate, Error::Precondition {
                id: record.id.clone(),
                message: "record has no provenance".into(),
            }))?;
        let script = record.script.unwrap_or_else(|| record.script_hint.resolve());
        // Form feeds are not representable in XML; a newline keeps offsets.
        let sofa = normalized.replace(PAGE_SEPARATOR, "\n");
        let mut doc = AnnotatedDocument::new(&record.id, &record.parliament, sofa, provenance, script);
        let (sentences, tokens) = self.segmenter.segment(&doc.sofa);
        doc.sentences = sentences;
        doc.tokens = tokens;

        let mut attached = false;
        if let Some(dir) = &self.config.sidecar_dir {
            let payload_path = dir.join(format!("{}.json", record.id));
            if payload_path.is_file() {
                let payload = SidecarPayload::load(&payload_path).map_err(|e| (Stage::Annotate, e))?;
                let options = AttachOptions {
                    replace_segmentation: self.config.replace_segmentation,
                };
                doc = attach_external_annotations(&doc, &payload, options).map_err(|e| (Stage::Annotate, e))?;
                attached = true;
            }
        }

        let source_name = self.source_name(record);
        match extract_metadata(&normalized, &source_name, &record.parliament)
            .or_else(|_| extract_metadata(&normalized, &record.id, &record.parliament))
        {
            Ok(meta) => {
                doc.document_meta.document_title = meta.title.clone();
                doc.metadata = Some(meta);
            }
            Err(Error::MetadataMissing(_)) => {
                doc.document_meta.document_title = format!("{}-Plenarprotokoll {}", record.parliament, record.id);
                doc.notes.push("metadata_missing".into());
            }
            Err(e) => return Err((Stage::Metadata, e)),
        }
        doc.validate().map_err(|e| (Stage::Annotate, e))?;
        Ok((doc, attached))
    }

    fn source_name(&self, record: &DocumentRecord) -> String {
        let manifest = read_manifest(&self.config.manifest_path).ok();
        manifest
            .as_ref()
            .and_then(|m| m.get(&record.id))
            .map(|e| {
                let loc = e.locator.trim_end_matches('/');
                loc.rsplit(['/', '\\']).next().unwrap_or(loc).to_string()
            })
            .unwrap_or_else(|| record.id.clone())
    }

    pub fn annotate(&self, records: Vec<DocumentRecord>) -> (StageOutcome, usize, usize) {
        log::info!("annotating documents");
        let attached = AtomicUsize::new(0);
        let missing = AtomicUsize::new(0);
        let outcome = self.map_records(
            records,
            |r| r.state >= State::Extracted,
            |r| {
                let (doc, was_attached) = self.annotate_record(r)?;
                if was_attached {
                    attached.fetch_add(1, Ordering::Relaxed);
                }
                if doc.metadata.is_none() {
                    missing.fetch_add(1, Ordering::Relaxed);
                }
                let json = serde_json::to_vec(&doc).expect("document serializes");
                write_atomic(&self.config.annotated_path(r), &json).map_err(|e| (Stage::Annotate, e))?;
                let mut next = r.clone();
                next.state = State::Annotated;
                Ok(next)
            },
        );
        (outcome, attached.into_inner(), missing.into_inner())
    }

    pub fn load_annotated(&self, record: &DocumentRecord) -> Result<AnnotatedDocument> {
        let path = self.config.annotated_path(record);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    /// Writes the XMI file for one annotated document and returns the
    /// packaged document.
    pub fn package_document(&self, mut doc: AnnotatedDocument) -> Result<(AnnotatedDocument, PathBuf)> {
        fs::create_dir_all(&self.config.out_path).map_err(|e| Error::io(&self.config.out_path, e))?;
        let out_abs = fs::canonicalize(&self.config.out_path).map_err(|e| Error::io(&self.config.out_path, e))?;
        let legislature = doc.metadata.as_ref().and_then(|m| m.legislature());
        let dir = package_dir(&out_abs, &doc.parliament, legislature);
        let name = xmi_file_name(&doc.document_id, self.config.gzip);
        let base = format!("file:{}/", out_abs.display());
        doc.document_meta.document_id = name.clone();
        doc.document_meta.document_uri = format!("file:{}", dir.join(&name).display());
        doc.document_meta.document_base_uri = base;
        let path = write_xmi(&doc, &dir, self.config.gzip)?;
        Ok((doc, path))
    }

    pub fn package(&self, records: Vec<DocumentRecord>) -> (StageOutcome, Vec<AnnotatedDocument>) {
        log::info!("packaging documents");
        let docs = std::sync::Mutex::new(Vec::new());
        let outcome = self.map_records(
            records,
            |r| r.state >= State::Annotated,
            |r| {
                let doc = self.load_annotated(r).map_err(|e| (Stage::Package, e))?;
                let (doc, _) = self.package_document(doc).map_err(|e| (Stage::Package, e))?;
                docs.lock().expect("no poisoned lock").push(doc);
                let mut next = r.clone();
                next.state = State::Packaged;
                Ok(next)
            },
        );
        let mut docs = docs.into_inner().expect("no poisoned lock");
        docs.sort_by(|a, b| a.document_id.cmp(&b.document_id));
        (outcome, docs)
    }

    /// Scores documents and writes per-document and per-parliament CSVs.
    pub fn quality(&self, docs: &[AnnotatedDocument], dict: &FrequencyDictionary) -> Result<(Vec<QualityReport>, Vec<QualityReport>)> {
        log::info!("scoring {} documents", docs.len());
        let reports: Vec<QualityReport> = self
            .pool
            .install(|| docs.par_iter().map(|d| score_document(d, dict)).collect());
        let parliaments: std::collections::HashMap<&str, &str> = docs
            .iter()
            .map(|d| (d.document_id.as_str(), d.parliament.as_str()))
            .collect();
        let grouped = aggregate_reports(&reports, |r| {
            parliaments.get(r.key.as_str()).copied().unwrap_or_default().to_string()
        });
        write_reports(&reports, &self.config.out_path.join("quality_documents.csv"))?;
        write_reports(&grouped, &self.config.out_path.join("quality_parliaments.csv"))?;
        Ok((reports, grouped))
    }
}

#[derive(Debug, Default)]
pub struct TextCounters {
    pub rasterized: AtomicUsize,
    pub enhanced: AtomicUsize,
    pub ocr: AtomicUsize,
    pub native: AtomicUsize,
}

/// Runs every stage in order. Only configuration and manifest problems
/// abort; everything else is recorded per document in the summary and the
/// failure ledger.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunSummary> {
    let pipeline = Pipeline::new(config.clone())?;
    let manifest = read_manifest(&config.manifest_path)?;
    let may_need_ocr = manifest.entries.iter().any(|e| e.format_hint != FormatHint::Readable);
    let engine = pipeline.ocr_engine(may_need_ocr)?;
    let dict = pipeline.dictionary()?;
    fs::create_dir_all(&config.store_path).map_err(|e| Error::io(&config.store_path, e))?;
    fs::create_dir_all(&config.out_path).map_err(|e| Error::io(&config.out_path, e))?;

    let mut summary = RunSummary {
        manifest_entries: manifest.len(),
        ..Default::default()
    };

    let (fetched, bytes) = pipeline.fetch(&manifest)?;
    summary.fetched = fetched.processed;
    summary.bytes_transferred = bytes;
    summary.failures.extend(fetched.failures);

    let classified = pipeline.classify(fetched.records);
    summary.classified = classified.processed;
    summary.failures.extend(classified.failures);
    for r in &classified.records {
        match r.classification {
            Some(Classification::Readable) => summary.readable += 1,
            Some(Classification::Scanned) => summary.scanned += 1,
            None => {}
        }
    }

    let (text, counters) = pipeline.acquire_text(classified.records, engine.as_ref())?;
    summary.pages_rasterized = counters.rasterized.into_inner();
    summary.pages_enhanced = counters.enhanced.into_inner();
    summary.ocr_documents = counters.ocr.into_inner();
    summary.native_documents = counters.native.into_inner();
    summary.failures.extend(text.failures);

    let (annotated, attached, missing) = pipeline.annotate(text.records);
    summary.annotated = annotated.processed;
    summary.sidecar_attached = attached;
    summary.metadata_missing = missing;
    summary.failures.extend(annotated.failures);

    let (packaged, docs) = pipeline.package(annotated.records);
    summary.packaged = packaged.processed;
    summary.failures.extend(packaged.failures);
    save_records(&config.records_path(), &packaged.records)?;

    let (reports, _) = pipeline.quality(&docs, &dict)?;
    summary.quality_reports = reports.len();

    write_failure_ledger(&config.failures_path(), &summary.failures, true)?;
    let mut f = fs::File::create(config.out_path.join("run_summary.json"))
        .map_err(|e| Error::io(config.out_path.join("run_summary.json"), e))?;
    f.write_all(serde_json::to_string_pretty(&summary).expect("summary serializes").as_bytes())
        .map_err(|e| Error::io(config.out_path.join("run_summary.json"), e))?;
    Ok(summary)
}
