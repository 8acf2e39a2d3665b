use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use parlagest::corpus::{compute_corpus_stats, filter_subcorpus, scan_corpus, SubcorpusFilter};
use parlagest::error::Error;
use parlagest::fetch::FetchOptions;
use parlagest::ocr::OcrStrategy;
use parlagest::pipeline::{
    load_records, read_manifest, run_pipeline, save_records, write_failure_ledger, Pipeline, PipelineConfig,
    StageFailure, StageOutcome,
};
use parlagest::record::Classification;

#[derive(Parser)]
#[command(name = "parlagest", version, about = "Build annotated XMI corpora from parliamentary protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: GlobalOpts,
}

#[derive(Subcommand)]
enum Command {
    /// Download or copy every manifest entry into the store
    Fetch,
    /// Decide per document whether OCR is needed
    Classify,
    /// Produce raw text: OCR for scans, text-layer extraction otherwise
    Ocr,
    /// Normalize, segment, attach sidecar layers and extract metadata
    Annotate,
    /// Write XMI files into the output tree
    Package,
    /// Score packaged documents against the frequency dictionary
    Quality,
    /// Per-parliament session, sentence and token counts
    Stats,
    /// List packaged documents that match --filter
    Subcorpus,
    /// Run every stage in order
    Run,
}

#[derive(Args)]
struct GlobalOpts {
    #[arg(long, global = true, default_value = "manifest.csv")]
    manifest: PathBuf,
    #[arg(long, global = true, default_value = "store")]
    store: PathBuf,
    #[arg(long, global = true, default_value = "corpus")]
    out: PathBuf,
    #[arg(long, global = true, default_value_t = parlagest::imaging::DEFAULT_DPI)]
    dpi: u32,
    /// OCR executable, or `none` to disable OCR
    #[arg(long, global = true, default_value = "tesseract")]
    ocr_engine: String,
    /// Extra arguments passed to the OCR engine, whitespace separated
    #[arg(long, global = true, allow_hyphen_values = true)]
    ocr_extra_args: Option<String>,
    #[arg(long, global = true, default_value = "one_core_many_jobs")]
    ocr_strategy: OcrStrategy,
    /// Total worker threads; defaults to the number of CPUs
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Frequency dictionary (`word frequency` per line)
    #[arg(long, global = true)]
    dict: Option<PathBuf>,
    #[arg(long, global = true)]
    keep_images: bool,
    #[arg(long, global = true)]
    no_gzip: bool,
    #[arg(long, global = true, default_value = "all")]
    filter: SubcorpusFilter,
    /// Directory with `<id>.json` annotation payloads from the NLP sidecar
    #[arg(long, global = true)]
    sidecar_dir: Option<PathBuf>,
    /// Let sidecar payloads replace sentences and tokens
    #[arg(long, global = true)]
    replace_segmentation: bool,
    /// Additional abbreviations for sentence splitting, one per line
    #[arg(long, global = true)]
    abbreviations: Option<PathBuf>,
    /// Minimum extractable characters per page for a readable PDF
    #[arg(long, global = true, default_value_t = parlagest::pdf::DEFAULT_READABLE_THRESHOLD)]
    readable_threshold: f64,
    /// Pause between remote downloads, in milliseconds
    #[arg(long, global = true, default_value_t = 0)]
    delay_ms: u64,
    /// Download timeout in seconds; 0 disables it
    #[arg(long, global = true, default_value_t = 120)]
    timeout_s: u64,
}

impl GlobalOpts {
    fn config(&self) -> PipelineConfig {
        let mut c = PipelineConfig::new(&self.manifest, &self.store, &self.out);
        c.dpi = self.dpi;
        c.ocr_engine = self.ocr_engine.clone();
        c.ocr_engine_args = self
            .ocr_extra_args
            .as_deref()
            .map(|s| s.split_whitespace().map(String::from).collect())
            .unwrap_or_default();
        c.ocr_strategy = self.ocr_strategy;
        if let Some(t) = self.threads {
            c.total_threads = t;
        }
        c.dictionary_path = self.dict.clone();
        c.keep_images = self.keep_images;
        c.gzip = !self.no_gzip;
        c.readable_threshold = self.readable_threshold;
        c.sidecar_dir = self.sidecar_dir.clone();
        c.replace_segmentation = self.replace_segmentation;
        c.abbreviations_path = self.abbreviations.clone();
        c.fetch = FetchOptions {
            delay: Duration::from_millis(self.delay_ms),
            timeout: (self.timeout_s > 0).then(|| Duration::from_secs(self.timeout_s)),
        };
        c
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage mistakes are configuration errors; 2 is reserved for the manifest.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ManifestParse { .. } | Error::DuplicateId { .. } => 2,
        _ => 1,
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let config = cli.opts.config();
    if let Command::Run = cli.command {
        let summary = run_pipeline(&config)?;
        eprint!("{}", summary.render());
        return Ok(());
    }
    let pipeline = Pipeline::new(config.clone())?;
    let records_path = config.records_path();
    match cli.command {
        Command::Fetch => {
            let manifest = read_manifest(&config.manifest_path)?;
            let (outcome, bytes) = pipeline.fetch(&manifest)?;
            eprintln!("fetched {} of {} documents, {bytes} bytes transferred", outcome.processed, manifest.len());
            finish_stage(&config, &records_path, outcome)
        }
        Command::Classify => {
            let outcome = pipeline.classify(load_records(&records_path)?);
            let readable = outcome
                .records
                .iter()
                .filter(|r| r.classification == Some(Classification::Readable))
                .count();
            eprintln!(
                "classified {} documents: {readable} readable, {} scanned",
                outcome.processed,
                outcome.processed.saturating_sub(readable)
            );
            finish_stage(&config, &records_path, outcome)
        }
        Command::Ocr => {
            let records = load_records(&records_path)?;
            let needs_ocr = records
                .iter()
                .any(|r| r.classification == Some(Classification::Scanned));
            let engine = pipeline.ocr_engine(needs_ocr)?;
            let (outcome, counters) = pipeline.acquire_text(records, engine.as_ref())?;
            eprintln!(
                "text acquired for {} documents ({} OCR, {} native), {} pages rasterized, {} enhanced",
                outcome.processed,
                counters.ocr.into_inner(),
                counters.native.into_inner(),
                counters.rasterized.into_inner(),
                counters.enhanced.into_inner()
            );
            finish_stage(&config, &records_path, outcome)
        }
        Command::Annotate => {
            let (outcome, attached, missing) = pipeline.annotate(load_records(&records_path)?);
            eprintln!(
                "annotated {} documents, {attached} with sidecar layers, {missing} without session metadata",
                outcome.processed
            );
            finish_stage(&config, &records_path, outcome)
        }
        Command::Package => {
            let (outcome, _) = pipeline.package(load_records(&records_path)?);
            eprintln!("packaged {} documents into {}", outcome.processed, config.out_path.display());
            finish_stage(&config, &records_path, outcome)
        }
        Command::Quality => quality(&pipeline, &config.out_path),
        Command::Stats => {
            let stats = compute_corpus_stats(&config.out_path)?;
            let path = config.out_path.join("stats.csv");
            std::fs::write(&path, stats.to_csv()).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            eprint!("{}", stats.to_table());
            report_unreadable(&stats.unreadable);
            eprintln!("{} sessions in total, written to {}", stats.total_sessions(), path.display());
            Ok(())
        }
        Command::Subcorpus => {
            let sub = filter_subcorpus(&config.out_path, cli.opts.filter)?;
            let path = config.out_path.join(format!("subcorpus_{}.txt", cli.opts.filter));
            let mut listing = String::new();
            for p in &sub.paths {
                listing.push_str(&p.display().to_string());
                listing.push('\n');
            }
            std::fs::write(&path, listing).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            report_unreadable(&sub.unreadable);
            eprintln!("{} documents match `{}`, listed in {}", sub.paths.len(), cli.opts.filter, path.display());
            Ok(())
        }
        Command::Run => unreachable!(),
    }
}

fn finish_stage(config: &PipelineConfig, records_path: &Path, outcome: StageOutcome) -> Result<(), Error> {
    save_records(records_path, &outcome.records)?;
    report_failures(&outcome.failures);
    write_failure_ledger(&config.failures_path(), &outcome.failures, false)
}

fn report_failures(failures: &[StageFailure]) {
    if !failures.is_empty() {
        eprintln!("{} documents failed:", failures.len());
    }
    for f in failures {
        eprintln!("  {} [{}] {}", f.id, f.stage, f.cause.replace('\n', " "));
    }
}

fn report_unreadable(unreadable: &[parlagest::corpus::Unreadable]) {
    for u in unreadable {
        eprintln!("unreadable: {}: {}", u.path.display(), u.cause);
    }
}

fn quality(pipeline: &Pipeline, out: &Path) -> Result<(), Error> {
    let dict = pipeline.dictionary()?;
    let (docs, unreadable) = scan_corpus(out)?;
    report_unreadable(&unreadable);
    let docs: Vec<_> = docs.into_iter().map(|(_, d)| d).collect();
    let (_, grouped) = pipeline.quality(&docs, &dict)?;
    eprintln!("{:<24} {:>10} {:>8} {:>8} {:>8}", "parliament", "good", "right", "unknown", "wrong");
    let cell = |p: Option<f64>| p.map(|v| format!("{v:.2}")).unwrap_or_else(|| "-".into());
    for r in &grouped {
        eprintln!(
            "{:<24} {:>10} {:>8} {:>8} {:>8}",
            r.key,
            cell(r.good_quality),
            cell(r.pct_right),
            cell(r.pct_unknown),
            cell(r.pct_wrong)
        );
    }
    Ok(())
}
