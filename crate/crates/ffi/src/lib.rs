//! C ABI for parlagest.
//!
//! Every fallible function returns a [`PgStatus`] and writes its results
//! through out-pointers. On failure a message is kept per thread and can be
//! read with [`pg_last_error`]. Strings and byte buffers handed out by this
//! library must be released with [`pg_string_free`] and [`pg_bytes_free`];
//! handles with their matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use parlagest::annotate::sidecar::SidecarPayload;
use parlagest::annotate::{attach_external_annotations, normalize_text, segment, AttachOptions};
use parlagest::metadata::timestamp_ms;
use parlagest::ocr::PAGE_SEPARATOR;
use parlagest::quality::report::{score_tokens, spellcheck_token, Verdict};
use parlagest::xmi::{from_xmi_bytes, read_xmi, to_xmi_bytes, write_xmi};
use parlagest::{
    compute_worker_budget, extract_metadata, AnnotatedDocument, Error, FrequencyDictionary, OcrStrategy, Provenance,
    QualityReport, Script,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    Parse = 5,
    InvalidDocument = 6,
    SidecarRejected = 7,
    MetadataMissing = 8,
    /// A lookup found nothing; not an error, no message is set.
    NotFound = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgVerdict {
    Correct = 0,
    Wrong = 1,
    Unknown = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStrategy {
    OneCoreManyJobs = 0,
    FourCoreFewJobs = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgProvenance {
    NativeText = 0,
    Ocr = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgScript {
    Antiqua = 0,
    Fraktur = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PgWorkerBudget {
    pub total_threads: usize,
    pub engine_cores_per_job: usize,
    pub parallel_jobs: usize,
}

/// Token counts and percentages. A percentage is NaN when its denominator
/// is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgQualityReport {
    pub n_skipped: u64,
    pub n_correct: u64,
    pub n_wrong: u64,
    pub n_unknown: u64,
    pub pct_right: f64,
    pub pct_wrong: f64,
    pub pct_unknown: f64,
    pub good_quality: f64,
    pub unknown_good_quality: f64,
}

/// Opaque frequency dictionary with its spelling index.
pub struct PgDictionary(FrequencyDictionary);

/// Opaque annotated document.
pub struct PgDocument(AnnotatedDocument);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(message).ok());
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(e: &Error) -> PgStatus {
    match e {
        Error::Io { .. } => PgStatus::Io,
        Error::ManifestParse { .. } | Error::Dictionary { .. } | Error::XmiMalformed(_) => PgStatus::Parse,
        Error::XmiDanglingReference { .. } | Error::XmiOffsetOutOfRange { .. } => PgStatus::Parse,
        Error::InvalidDocument(_) => PgStatus::InvalidDocument,
        Error::SidecarRejected(_) => PgStatus::SidecarRejected,
        Error::MetadataMissing(_) => PgStatus::MetadataMissing,
        _ => PgStatus::InvalidArgument,
    }
}

struct Failure(PgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

/// Runs `f`, records its error message and turns panics into a status.
fn guard(f: impl FnOnce() -> FfiResult) -> PgStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PgStatus::Ok,
        Ok(Err(Failure(PgStatus::NotFound, _))) => PgStatus::NotFound,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PgStatus::Panic
        }
    }
}

fn null(name: &str) -> Failure {
    Failure(PgStatus::NullPointer, format!("`{name}` is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PgStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(name))
}

fn c_string(s: &str) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(PgStatus::InvalidArgument, "string contains NUL".into()))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Every function
/// returning a [`PgStatus`] resets it, so read it before the next such call.
#[no_mangle]
pub extern "C" fn pg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` is NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `data`/`len` are NULL/0 or a buffer returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pg_bytes_free(data: *mut u8, len: usize) {
    if !data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(data, len)));
    }
}

/// The German frequency list compiled into the library.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_dictionary_shipped(out: *mut *mut PgDictionary) -> PgStatus {
    guard(|| {
        *out_arg(out, "out")? = boxed(PgDictionary(FrequencyDictionary::shipped()));
        Ok(())
    })
}

/// Loads a `word frequency` file.
///
/// # Safety
/// `path` is a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_dictionary_load(
    path: *const c_char,
    max_edit_distance: usize,
    prefix_length: usize,
    out: *mut *mut PgDictionary,
) -> PgStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let dict = FrequencyDictionary::load(Path::new(path), max_edit_distance, prefix_length)?;
        *out = boxed(PgDictionary(dict));
        Ok(())
    })
}

/// # Safety
/// `dict` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pg_dictionary_free(dict: *mut PgDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// Number of distinct (lowercased) words; 0 for NULL.
///
/// # Safety
/// `dict` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pg_dictionary_len(dict: *const PgDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.0.len())
}

/// Best suggestion for `token`. Returns `NotFound` when nothing lies within
/// the edit distance; `out_term` then stays untouched.
///
/// # Safety
/// `dict` is a live handle, `token` a NUL-terminated string and every out
/// pointer writable.
#[no_mangle]
pub unsafe extern "C" fn pg_dictionary_lookup(
    dict: *const PgDictionary,
    token: *const c_char,
    out_term: *mut *mut c_char,
    out_distance: *mut usize,
    out_frequency: *mut u64,
) -> PgStatus {
    guard(|| {
        let dict = handle(dict, "dict")?;
        let token = str_arg(token, "token")?;
        let (term, distance, frequency) = (
            out_arg(out_term, "out_term")?,
            out_arg(out_distance, "out_distance")?,
            out_arg(out_frequency, "out_frequency")?,
        );
        let s = dict
            .0
            .lookup(token)
            .ok_or(Failure(PgStatus::NotFound, String::new()))?;
        *term = c_string(&s.term)?;
        *distance = s.distance;
        *frequency = s.frequency;
        Ok(())
    })
}

/// # Safety
/// `dict` is a live handle, `token` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_spellcheck_token(
    dict: *const PgDictionary,
    token: *const c_char,
    out: *mut PgVerdict,
) -> PgStatus {
    guard(|| {
        let dict = handle(dict, "dict")?;
        let token = str_arg(token, "token")?;
        *out_arg(out, "out")? = match spellcheck_token(token, &dict.0) {
            Verdict::Correct => PgVerdict::Correct,
            Verdict::Wrong => PgVerdict::Wrong,
            Verdict::Unknown => PgVerdict::Unknown,
        };
        Ok(())
    })
}

impl From<&QualityReport> for PgQualityReport {
    fn from(r: &QualityReport) -> Self {
        let pct = |p: Option<f64>| p.unwrap_or(f64::NAN);
        PgQualityReport {
            n_skipped: r.n_skipped,
            n_correct: r.n_correct,
            n_wrong: r.n_wrong,
            n_unknown: r.n_unknown,
            pct_right: pct(r.pct_right),
            pct_wrong: pct(r.pct_wrong),
            pct_unknown: pct(r.pct_unknown),
            good_quality: pct(r.good_quality),
            unknown_good_quality: pct(r.unknown_good_quality),
        }
    }
}

/// Percentages for raw counts.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_quality_from_counts(
    n_skipped: u64,
    n_correct: u64,
    n_wrong: u64,
    n_unknown: u64,
    out: *mut PgQualityReport,
) -> PgStatus {
    guard(|| {
        let report = QualityReport::from_counts("", n_skipped, n_correct, n_wrong, n_unknown);
        *out_arg(out, "out")? = (&report).into();
        Ok(())
    })
}

/// Segments `text` and scores its tokens against `dict`.
///
/// # Safety
/// `dict` is a live handle, `text` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_score_text(
    dict: *const PgDictionary,
    text: *const c_char,
    out: *mut PgQualityReport,
) -> PgStatus {
    guard(|| {
        let dict = handle(dict, "dict")?;
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let (_, tokens) = segment(text);
        let chars: Vec<char> = text.chars().collect();
        let words: Vec<String> = tokens
            .iter()
            .map(|t| chars[t.span.begin..t.span.end].iter().collect())
            .collect();
        let report = score_tokens("", words.iter().map(String::as_str), &dict.0);
        *out = (&report).into();
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_worker_budget(
    total_threads: usize,
    strategy: PgStrategy,
    out: *mut PgWorkerBudget,
) -> PgStatus {
    guard(|| {
        let strategy = match strategy {
            PgStrategy::OneCoreManyJobs => OcrStrategy::OneCoreManyJobs,
            PgStrategy::FourCoreFewJobs => OcrStrategy::FourCoreFewJobs,
        };
        let b = compute_worker_budget(total_threads, strategy)?;
        *out_arg(out, "out")? = PgWorkerBudget {
            total_threads: b.total_threads,
            engine_cores_per_job: b.engine_cores_per_job,
            parallel_jobs: b.parallel_jobs,
        };
        Ok(())
    })
}

/// UTC midnight of the date in milliseconds since the epoch.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_timestamp_ms(day: u32, month: u32, year: i32, out: *mut i64) -> PgStatus {
    guard(|| {
        *out_arg(out, "out")? = timestamp_ms(day, month, year)?;
        Ok(())
    })
}

/// Session metadata found in `text` and `filename`, as a JSON object.
///
/// # Safety
/// The strings are NUL-terminated; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_extract_metadata_json(
    text: *const c_char,
    filename: *const c_char,
    parliament: *const c_char,
    out_json: *mut *mut c_char,
) -> PgStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let filename = str_arg(filename, "filename")?;
        let parliament = str_arg(parliament, "parliament")?;
        let out = out_arg(out_json, "out_json")?;
        let meta = extract_metadata(text, filename, parliament)?;
        *out = c_string(&serde_json::to_string(&meta).expect("metadata serializes"))?;
        Ok(())
    })
}

/// Builds a natively segmented document from raw text. Session metadata is
/// attached when it can be found in the text or the id.
///
/// # Safety
/// The strings are NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_from_text(
    document_id: *const c_char,
    parliament: *const c_char,
    text: *const c_char,
    provenance: PgProvenance,
    script: PgScript,
    out: *mut *mut PgDocument,
) -> PgStatus {
    guard(|| {
        let id = str_arg(document_id, "document_id")?;
        let parliament = str_arg(parliament, "parliament")?;
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let provenance = match provenance {
            PgProvenance::NativeText => Provenance::NativeText,
            PgProvenance::Ocr => Provenance::Ocr,
        };
        let script = match script {
            PgScript::Antiqua => Script::Antiqua,
            PgScript::Fraktur => Script::Fraktur,
        };
        let normalized = normalize_text(text);
        let sofa = normalized.replace(PAGE_SEPARATOR, "\n");
        let mut doc = AnnotatedDocument::new(id, parliament, sofa, provenance, script);
        let (sentences, tokens) = segment(&doc.sofa);
        doc.sentences = sentences;
        doc.tokens = tokens;
        match extract_metadata(&normalized, id, parliament) {
            Ok(meta) => {
                doc.document_meta.document_title = meta.title.clone();
                doc.metadata = Some(meta);
            }
            Err(Error::MetadataMissing(_)) => doc.notes.push("metadata_missing".into()),
            Err(e) => return Err(e.into()),
        }
        doc.validate()?;
        *out = boxed(PgDocument(doc));
        Ok(())
    })
}

/// Reads a plain or gzip-compressed XMI file.
///
/// # Safety
/// `path` is NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_read(path: *const c_char, out: *mut *mut PgDocument) -> PgStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        *out = boxed(PgDocument(read_xmi(Path::new(path))?));
        Ok(())
    })
}

/// Parses XMI from memory, plain or gzip-compressed.
///
/// # Safety
/// `data` points to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_from_xmi(data: *const u8, len: usize, out: *mut *mut PgDocument) -> PgStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let out = out_arg(out, "out")?;
        let bytes = std::slice::from_raw_parts(data, len);
        *out = boxed(PgDocument(from_xmi_bytes(bytes)?));
        Ok(())
    })
}

/// # Safety
/// `doc` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pg_document_free(doc: *mut PgDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// # Safety
/// `doc` is a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_sofa(doc: *const PgDocument, out: *mut *mut c_char) -> PgStatus {
    guard(|| {
        let doc = handle(doc, "doc")?;
        *out_arg(out, "out")? = c_string(&doc.0.sofa)?;
        Ok(())
    })
}

/// # Safety
/// `doc` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pg_document_token_count(doc: *const PgDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.0.tokens.len())
}

/// # Safety
/// `doc` is NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pg_document_sentence_count(doc: *const PgDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.0.sentences.len())
}

/// Character offsets `[begin, end)` of token `index`.
///
/// # Safety
/// `doc` is a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_token_span(
    doc: *const PgDocument,
    index: usize,
    out_begin: *mut usize,
    out_end: *mut usize,
) -> PgStatus {
    guard(|| {
        let doc = handle(doc, "doc")?;
        let (begin, end) = (out_arg(out_begin, "out_begin")?, out_arg(out_end, "out_end")?);
        let token = doc.0.tokens.get(index).ok_or_else(|| {
            Failure(
                PgStatus::InvalidArgument,
                format!("token {index} out of range, document has {}", doc.0.tokens.len()),
            )
        })?;
        *begin = token.span.begin;
        *end = token.span.end;
        Ok(())
    })
}

/// Session metadata as JSON, or `MetadataMissing`.
///
/// # Safety
/// `doc` is a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_metadata_json(doc: *const PgDocument, out_json: *mut *mut c_char) -> PgStatus {
    guard(|| {
        let doc = handle(doc, "doc")?;
        let out = out_arg(out_json, "out_json")?;
        let meta = doc.0.metadata.as_ref().ok_or_else(|| {
            Failure(
                PgStatus::MetadataMissing,
                format!("no session metadata for `{}`", doc.0.document_id),
            )
        })?;
        *out = c_string(&serde_json::to_string(meta).expect("metadata serializes"))?;
        Ok(())
    })
}

/// Serializes to XMI; free the buffer with [`pg_bytes_free`].
///
/// # Safety
/// `doc` is a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_to_xmi(
    doc: *const PgDocument,
    gzip: bool,
    out_data: *mut *mut u8,
    out_len: *mut usize,
) -> PgStatus {
    guard(|| {
        let doc = handle(doc, "doc")?;
        let (data, len) = (out_arg(out_data, "out_data")?, out_arg(out_len, "out_len")?);
        let bytes = to_xmi_bytes(&doc.0, gzip)?.into_boxed_slice();
        *len = bytes.len();
        *data = Box::into_raw(bytes).cast();
        Ok(())
    })
}

/// Writes `<dir>/<document id>.xmi[.gz]` and returns the path.
///
/// # Safety
/// `doc` is a live handle, `dir` NUL-terminated, `out_path` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_write(
    doc: *const PgDocument,
    dir: *const c_char,
    gzip: bool,
    out_path: *mut *mut c_char,
) -> PgStatus {
    guard(|| {
        let doc = handle(doc, "doc")?;
        let dir = str_arg(dir, "dir")?;
        let out = out_arg(out_path, "out_path")?;
        let path = write_xmi(&doc.0, Path::new(dir), gzip)?;
        *out = c_string(&path.to_string_lossy())?;
        Ok(())
    })
}

/// New document with the layers of a sidecar JSON payload attached. The
/// input handle is left unchanged.
///
/// # Safety
/// `doc` is a live handle, `payload_json` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_document_attach_sidecar(
    doc: *const PgDocument,
    payload_json: *const c_char,
    replace_segmentation: bool,
    out: *mut *mut PgDocument,
) -> PgStatus {
    guard(|| {
        let doc = handle(doc, "doc")?;
        let json = str_arg(payload_json, "payload_json")?;
        let out = out_arg(out, "out")?;
        let payload = SidecarPayload::from_json(json)?;
        let attached = attach_external_annotations(&doc.0, &payload, AttachOptions { replace_segmentation })?;
        *out = boxed(PgDocument(attached));
        Ok(())
    })
}
