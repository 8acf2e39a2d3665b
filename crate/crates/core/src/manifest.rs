//! Source manifests: the declarative list of protocols to ingest.
//!
//! A manifest is a UTF-8 comma-separated table with the fixed header
//! `id,parliament,period,locator,format_hint,script_hint,scan_quality_hint`.
//! Empty hint cells read as `unknown`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_HEADER: [&str; 7] = [
    "id",
    "parliament",
    "period",
    "locator",
    "format_hint",
    "script_hint",
    "scan_quality_hint",
];

macro_rules! closed_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl ::std::fmt::Display for $name {
            fn fmt(&self, f: &mut ::std::fmt::Formatter<'_>) -> ::std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl ::std::str::FromStr for $name {
            type Err = $crate::error::Error;

            fn from_str(s: &str) -> $crate::error::Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err($crate::error::Error::Invalid(format!(
                        "`{}` is not a valid {} (expected one of: {})",
                        other,
                        stringify!($name),
                        [$($text),+].join("|")
                    ))),
                }
            }
        }
    };
}

pub(crate) use closed_enum;

closed_enum!(
    /// Whether a document is expected to carry a usable text layer.
    FormatHint { Readable => "readable", Scanned => "scanned", Unknown => "unknown" }
);

closed_enum!(
    /// Typeface family of the printed protocol.
    ScriptHint { Antiqua => "antiqua", Fraktur => "fraktur", Unknown => "unknown" }
);

closed_enum!(
    /// Known quality of the scan, if the curator has looked at it.
    ScanQualityHint { Good => "good", Poor => "poor", Unknown => "unknown" }
);

/// Where an entry's bytes come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Locator {
    Url(String),
    Path(PathBuf),
}

impl Locator {
    pub fn parse(raw: &str) -> Self {
        if raw.starts_with("http://") || raw.starts_with("https://") {
            return Locator::Url(raw.to_string());
        }
        let path = raw
            .strip_prefix("file://")
            .or_else(|| raw.strip_prefix("file:"))
            .unwrap_or(raw);
        Locator::Path(PathBuf::from(path))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub parliament: String,
    pub period_label: String,
    /// URL, `file:` URI or plain filesystem path, kept verbatim.
    pub locator: String,
    pub format_hint: FormatHint,
    pub script_hint: ScriptHint,
    pub scan_quality_hint: ScanQualityHint,
}

impl ManifestEntry {
    pub fn locator(&self) -> Locator {
        Locator::parse(&self.locator)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceManifest {
    pub entries: Vec<ManifestEntry>,
}

impl SourceManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    /// Checks the manifest invariants: unique ids, non-empty parliament and
    /// locator. Line numbers in errors assume one entry per line after the
    /// header.
    pub fn validate(&self) -> Result<()> {
        let mut seen: HashMap<&str, u64> = HashMap::new();
        for (i, entry) in self.entries.iter().enumerate() {
            let line = i as u64 + 2;
            check_entry(entry, line)?;
            if let Some(first_line) = seen.insert(entry.id.as_str(), line) {
                return Err(Error::DuplicateId {
                    id: entry.id.clone(),
                    first_line,
                    second_line: line,
                });
            }
        }
        Ok(())
    }
}

fn check_entry(entry: &ManifestEntry, line: u64) -> Result<()> {
    let missing = if entry.id.trim().is_empty() {
        Some("id")
    } else if entry.parliament.trim().is_empty() {
        Some("parliament")
    } else if entry.locator.trim().is_empty() {
        Some("locator")
    } else {
        None
    };
    match missing {
        Some(field) => Err(Error::ManifestParse {
            line,
            message: format!("empty `{field}`"),
        }),
        None => Ok(()),
    }
}

fn parse_hint<T: FromStr<Err = Error>>(cell: Option<&str>, line: u64) -> Result<T> {
    let cell = cell.map(str::trim).filter(|c| !c.is_empty()).unwrap_or("unknown");
    cell.parse().map_err(|e: Error| Error::ManifestParse {
        line,
        message: e.to_string(),
    })
}

pub fn parse_manifest<R: Read>(reader: R) -> Result<SourceManifest> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let header = csv.headers().map_err(|e| Error::ManifestParse {
        line: 1,
        message: e.to_string(),
    })?;
    let header: Vec<&str> = header.iter().map(str::trim).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::ManifestParse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    if header != MANIFEST_HEADER {
        return Err(Error::ManifestParse {
            line: 1,
            message: format!(
                "unexpected header `{}`, expected `{}`",
                header.join(","),
                MANIFEST_HEADER.join(",")
            ),
        });
    }

    let mut entries = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in csv.records() {
        let row = row.map_err(|e| Error::ManifestParse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if row.len() < 4 || row.len() > MANIFEST_HEADER.len() {
            return Err(Error::ManifestParse {
                line,
                message: format!("expected 4 to 7 fields, found {}", row.len()),
            });
        }
        let cell = |i: usize| row.get(i).map(str::trim).unwrap_or("").to_string();
        let entry = ManifestEntry {
            id: cell(0),
            parliament: cell(1),
            period_label: cell(2),
            locator: cell(3),
            format_hint: parse_hint(row.get(4), line)?,
            script_hint: parse_hint(row.get(5), line)?,
            scan_quality_hint: parse_hint(row.get(6), line)?,
        };
        check_entry(&entry, line)?;
        if let Some(&first_line) = seen.get(&entry.id) {
            return Err(Error::DuplicateId {
                id: entry.id,
                first_line,
                second_line: line,
            });
        }
        seen.insert(entry.id.clone(), line);
        entries.push(entry);
    }
    Ok(SourceManifest { entries })
}

pub fn load_manifest(path: &Path) -> Result<SourceManifest> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(file)
}

pub fn write_manifest_to<W: Write>(manifest: &SourceManifest, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::Invalid(format!("cannot write manifest: {e}"));
    csv.write_record(MANIFEST_HEADER).map_err(to_err)?;
    for e in &manifest.entries {
        csv.write_record([
            e.id.as_str(),
            e.parliament.as_str(),
            e.period_label.as_str(),
            e.locator.as_str(),
            e.format_hint.as_str(),
            e.script_hint.as_str(),
            e.scan_quality_hint.as_str(),
        ])
        .map_err(to_err)?;
    }
    csv.flush()
        .map_err(|e| Error::Invalid(format!("cannot write manifest: {e}")))?;
    Ok(())
}

pub fn write_manifest(manifest: &SourceManifest, path: &Path) -> Result<()> {
    manifest.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_manifest_to(manifest, file)
}
