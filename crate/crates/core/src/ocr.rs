//! Driving an external OCR engine over page images.
//!
//! The engine is a separate executable speaking the tesseract command-line
//! contract: `<engine> <image> <out-base> -l <model> [extra args]`, with
//! the recognised text written to `<out-base>.txt`. Each page is a separate
//! invocation so one bad page cannot take down the whole document.

use std::env;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::PageImage;
use crate::manifest::closed_enum;
use crate::record::Script;

/// Cores tesseract uses per process unless told otherwise.
pub const ENGINE_DEFAULT_CORES: usize = 4;
pub const PAGE_SEPARATOR: char = '\u{c}';

closed_enum!(
    LanguageModel { Deu => "deu", DeuFrak => "deu_frak" }
);

impl From<Script> for LanguageModel {
    fn from(script: Script) -> Self {
        match script {
            Script::Antiqua => LanguageModel::Deu,
            Script::Fraktur => LanguageModel::DeuFrak,
        }
    }
}

closed_enum!(
    /// How to avoid oversubscribing cores when the engine is itself
    /// multi-threaded.
    OcrStrategy {
        OneCoreManyJobs => "one_core_many_jobs",
        FourCoreFewJobs => "four_core_few_jobs",
    }
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerBudget {
    pub total_threads: usize,
    pub engine_cores_per_job: usize,
    pub parallel_jobs: usize,
}

impl WorkerBudget {
    pub fn cores_in_flight(&self) -> usize {
        self.parallel_jobs * self.engine_cores_per_job
    }
}

/// Splits `total_threads` between concurrent engine processes.
///
/// `one_core_many_jobs` pins every engine to one core and runs one job per
/// thread. `four_core_few_jobs` keeps the engine's four cores and runs
/// `round(total / 4)` jobs (half away from zero), never fewer than one.
pub fn compute_worker_budget(total_threads: usize, strategy: OcrStrategy) -> Result<WorkerBudget> {
    if total_threads < 1 {
        return Err(Error::Invalid("total_threads must be at least 1".into()));
    }
    let (engine_cores_per_job, parallel_jobs) = match strategy {
        OcrStrategy::OneCoreManyJobs => (1, total_threads),
        OcrStrategy::FourCoreFewJobs => {
            let jobs = (total_threads as f64 / ENGINE_DEFAULT_CORES as f64).round() as usize;
            (ENGINE_DEFAULT_CORES, jobs.max(1))
        }
    };
    Ok(WorkerBudget {
        total_threads,
        engine_cores_per_job,
        parallel_jobs,
    })
}

#[derive(Debug, Clone)]
pub struct OcrJob {
    pub document_id: String,
    pub pages: Vec<PageImage>,
    pub language_model: LanguageModel,
    pub engine_cores: usize,
}

impl OcrJob {
    pub fn new(document_id: impl Into<String>, pages: Vec<PageImage>, script: Script, engine_cores: usize) -> Self {
        OcrJob {
            document_id: document_id.into(),
            pages,
            language_model: script.into(),
            engine_cores: engine_cores.max(1),
        }
    }
}

/// Recognised text, one string per input page.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OcrOutput {
    pub pages: Vec<String>,
}

impl OcrOutput {
    /// Pages joined by form feeds.
    pub fn text(&self) -> String {
        self.pages.join(&PAGE_SEPARATOR.to_string())
    }
}

#[derive(Debug, Clone)]
pub struct OcrEngine {
    executable: PathBuf,
    extra_args: Vec<String>,
}

impl OcrEngine {
    /// Resolves `name` (a bare command looked up on `PATH`, or a path) and
    /// fails with a configuration error when it cannot be found.
    pub fn locate(name: &str, extra_args: Vec<String>) -> Result<Self> {
        let executable = find_executable(name)
            .ok_or_else(|| Error::Config(format!("OCR engine `{name}` not found")))?;
        Ok(OcrEngine {
            executable,
            extra_args,
        })
    }

    pub fn executable(&self) -> &Path {
        &self.executable
    }

    fn recognise_page(
        &self,
        job_id: &str,
        page: &PageImage,
        model: LanguageModel,
        cores: usize,
        scratch: &Path,
    ) -> Result<String> {
        let fail = |message: String, stderr: String| Error::OcrEngine {
            id: job_id.to_string(),
            page: page.page_index,
            message,
            stderr,
        };
        if page.document_id != job_id {
            return Err(fail(
                format!("page belongs to document `{}`", page.document_id),
                String::new(),
            ));
        }
        let image_path = scratch.join(format!("page-{:05}.png", page.page_index));
        let out_base = scratch.join(format!("page-{:05}", page.page_index));
        page.save_png(&image_path)?;

        let output = Command::new(&self.executable)
            .arg(&image_path)
            .arg(&out_base)
            .arg("-l")
            .arg(model.as_str())
            .args(&self.extra_args)
            .env("OMP_THREAD_LIMIT", cores.to_string())
            .output()
            .map_err(|e| fail(format!("cannot start {}: {e}", self.executable.display()), String::new()))?;
        let stderr = String::from_utf8_lossy(&output.stderr).into_owned();
        if !output.status.success() {
            return Err(fail(format!("engine exited with {}", output.status), stderr));
        }
        let text_path = out_base.with_extension("txt");
        let bytes = std::fs::read(&text_path)
            .map_err(|e| fail(format!("cannot read {}: {e}", text_path.display()), stderr.clone()))?;
        let _ = std::fs::remove_file(&image_path);
        let _ = std::fs::remove_file(&text_path);
        Ok(clean_engine_text(&String::from_utf8_lossy(&bytes)))
    }

    /// Recognises every page of `job` in page order.
    pub fn run(&self, job: &OcrJob) -> Result<OcrOutput> {
        let scratch = scratch_dir(&job.document_id)?;
        let pages = job
            .pages
            .iter()
            .map(|page| {
                self.recognise_page(
                    &job.document_id,
                    page,
                    job.language_model,
                    job.engine_cores,
                    scratch.path(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OcrOutput { pages })
    }

    /// Runs many jobs on a pool of `budget.parallel_jobs` workers, each
    /// invocation limited to `budget.engine_cores_per_job` cores. Results
    /// come back in job order, pages in page order.
    pub fn run_batch(&self, jobs: &[OcrJob], budget: &WorkerBudget) -> Result<Vec<Result<OcrOutput>>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(budget.parallel_jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build OCR worker pool: {e}")))?;
        let scratches = jobs
            .iter()
            .map(|job| scratch_dir(&job.document_id))
            .collect::<Result<Vec<_>>>()?;
        let units: Vec<(usize, &PageImage)> = jobs
            .iter()
            .enumerate()
            .flat_map(|(j, job)| job.pages.iter().map(move |p| (j, p)))
            .collect();
        let recognised: Vec<(usize, Result<String>)> = pool.install(|| {
            units
                .par_iter()
                .map(|&(j, page)| {
                    let job = &jobs[j];
                    let text = self.recognise_page(
                        &job.document_id,
                        page,
                        job.language_model,
                        budget.engine_cores_per_job,
                        scratches[j].path(),
                    );
                    (j, text)
                })
                .collect()
        });

        let mut outputs: Vec<Result<OcrOutput>> = jobs.iter().map(|_| Ok(OcrOutput::default())).collect();
        for (j, text) in recognised {
            match (&mut outputs[j], text) {
                (Ok(out), Ok(text)) => out.pages.push(text),
                (slot @ Ok(_), Err(e)) => *slot = Err(e),
                (Err(_), _) => {}
            }
        }
        Ok(outputs)
    }
}

/// Convenience wrapper: locate nothing, just run one job.
pub fn run_ocr(engine: &OcrEngine, job: &OcrJob) -> Result<OcrOutput> {
    engine.run(job)
}

fn scratch_dir(document_id: &str) -> Result<tempfile::TempDir> {
    let prefix: String = document_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .take(32)
        .collect();
    tempfile::Builder::new()
        .prefix(&format!("parlagest-ocr-{prefix}-"))
        .tempdir()
        .map_err(|e| Error::io(env::temp_dir(), e))
}

/// Engines end pages with a form feed and trailing blank lines; blank pages
/// come back as whitespace only.
fn clean_engine_text(raw: &str) -> String {
    raw.trim_end_matches(|c: char| c.is_whitespace() || c == PAGE_SEPARATOR)
        .trim_start_matches(['\n', '\r', PAGE_SEPARATOR])
        .to_string()
}

fn find_executable(name: &str) -> Option<PathBuf> {
    let candidate = Path::new(name);
    if candidate.components().count() > 1 || candidate.is_absolute() {
        return is_executable(candidate).then(|| candidate.to_path_buf());
    }
    let path = env::var_os("PATH").unwrap_or_default();
    env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|p| is_executable(p))
}

#[cfg(unix)]
fn is_executable(path: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    path.metadata()
        .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
        .unwrap_or(false)
}

#[cfg(not(unix))]
fn is_executable(path: &Path) -> bool {
    path.is_file()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_examples() {
        let b = compute_worker_budget(16, OcrStrategy::FourCoreFewJobs).unwrap();
        assert_eq!((b.parallel_jobs, b.engine_cores_per_job), (4, 4));
        let b = compute_worker_budget(16, OcrStrategy::OneCoreManyJobs).unwrap();
        assert_eq!((b.parallel_jobs, b.engine_cores_per_job), (16, 1));
        let b = compute_worker_budget(1, OcrStrategy::FourCoreFewJobs).unwrap();
        assert_eq!(b.parallel_jobs, 1);
        assert_eq!(compute_worker_budget(6, OcrStrategy::FourCoreFewJobs).unwrap().parallel_jobs, 2);
        assert_eq!(compute_worker_budget(2, OcrStrategy::FourCoreFewJobs).unwrap().parallel_jobs, 1);
        assert!(compute_worker_budget(0, OcrStrategy::OneCoreManyJobs).is_err());
    }

    #[test]
    fn fraktur_selects_its_model() {
        assert_eq!(LanguageModel::from(Script::Fraktur).as_str(), "deu_frak");
        assert_eq!(LanguageModel::from(Script::Antiqua).as_str(), "deu");
    }

    #[test]
    fn engine_text_cleanup() {
        assert_eq!(clean_engine_text("Hallo\nWelt\n\n\u{c}"), "Hallo\nWelt");
        assert_eq!(clean_engine_text(" \n\u{c}"), "");
    }

    #[test]
    fn missing_engine_is_a_config_error() {
        assert!(matches!(
            OcrEngine::locate("definitely-not-an-ocr-engine-xyz", vec![]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            OcrEngine::locate("/nonexistent/tesseract", vec![]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn zero_pages_is_empty_text() {
        let engine = OcrEngine {
            executable: "/bin/false".into(),
            extra_args: vec![],
        };
        let job = OcrJob::new("d", vec![], Script::Antiqua, 1);
        let out = run_ocr(&engine, &job).unwrap();
        assert!(out.pages.is_empty());
        assert_eq!(out.text(), "");
    }
}
