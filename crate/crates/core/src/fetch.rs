//! Copies or downloads manifest entries into the local store.

use std::fs::{self, File};
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifest::{Locator, ManifestEntry, SourceManifest};
use crate::pipeline::{Stage, StageFailure};
use crate::record::DocumentRecord;

#[derive(Debug, Clone, Default)]
pub struct FetchOptions {
    /// Pause before every network request.
    pub delay: Duration,
    pub timeout: Option<Duration>,
}

#[derive(Debug, Default)]
pub struct FetchOutcome {
    pub records: Vec<DocumentRecord>,
    pub failures: Vec<StageFailure>,
    pub bytes_transferred: u64,
}

/// Directory name for a parliament inside the store and output trees.
pub fn parliament_dir(parliament: &str) -> String {
    parliament
        .chars()
        .map(|c| if matches!(c, '/' | '\\' | '\0') { '_' } else { c })
        .collect()
}

pub fn store_path(store: &Path, entry: &ManifestEntry) -> PathBuf {
    store
        .join(parliament_dir(&entry.parliament))
        .join(format!("{}.pdf", entry.id))
}

/// Fetches every entry. Entries already present in the store are left
/// untouched; failures are collected and do not stop the batch.
pub fn fetch_documents(
    manifest: &SourceManifest,
    store: &Path,
    options: &FetchOptions,
) -> Result<FetchOutcome> {
    fs::create_dir_all(store).map_err(|e| Error::io(store, e))?;
    let results: Vec<_> = manifest
        .entries
        .par_iter()
        .map(|entry| fetch_one(entry, store, options).map_err(|e| (entry.id.clone(), e)))
        .collect();

    let mut outcome = FetchOutcome::default();
    for result in results {
        match result {
            Ok((record, bytes)) => {
                outcome.bytes_transferred += bytes;
                outcome.records.push(record);
            }
            Err((id, e)) => outcome.failures.push(StageFailure::new(id, Stage::Fetch, &e)),
        }
    }
    Ok(outcome)
}

fn fetch_one(entry: &ManifestEntry, store: &Path, options: &FetchOptions) -> Result<(DocumentRecord, u64)> {
    let dest = store_path(store, entry);
    if dest.metadata().map(|m| m.len() > 0).unwrap_or(false) {
        return Ok((DocumentRecord::fetched(entry, dest), 0));
    }
    let parent = dest.parent().expect("store path has a parent");
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let partial = dest.with_extension("pdf.part");
    let fail = |message: String| Error::Fetch {
        id: entry.id.clone(),
        message,
    };

    let bytes = match entry.locator() {
        Locator::Path(src) => fs::copy(&src, &partial)
            .map_err(|e| fail(format!("cannot copy {}: {e}", src.display())))?,
        Locator::Url(url) => {
            if !options.delay.is_zero() {
                std::thread::sleep(options.delay);
            }
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(options.timeout)
                .build()
                .into();
            let mut response = agent
                .get(&url)
                .call()
                .map_err(|e| fail(format!("GET {url}: {e}")))?;
            let mut file = File::create(&partial).map_err(|e| Error::io(&partial, e))?;
            let copied = io::copy(&mut response.body_mut().as_reader(), &mut file);
            copied.map_err(|e| {
                let _ = fs::remove_file(&partial);
                fail(format!("reading {url}: {e}"))
            })?
        }
    };
    fs::rename(&partial, &dest).map_err(|e| Error::io(&dest, e))?;
    Ok((DocumentRecord::fetched(entry, dest), bytes))
}
