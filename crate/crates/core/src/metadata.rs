//! Session metadata: date, title and legislature/session subtitle.

use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, Datelike, NaiveDate};
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ocr::PAGE_SEPARATOR;

const MS_PER_DAY: i64 = 86_400_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMetadata {
    pub title: String,
    /// `<L>.Wahlperiode__<S>.Sitzung`, or empty when unknown.
    pub subtitle: String,
    pub date_day: u32,
    pub date_month: u32,
    pub date_year: i32,
    /// UTC midnight of the session date in milliseconds since the epoch.
    pub timestamp_ms: i64,
}

impl SessionMetadata {
    pub fn new(
        parliament: &str,
        day: u32,
        month: u32,
        year: i32,
        legislature: Option<u32>,
        session: Option<u32>,
    ) -> Result<Self> {
        let timestamp_ms = timestamp_ms(day, month, year)?;
        Ok(SessionMetadata {
            title: session_title(parliament, day, month, year),
            subtitle: match (legislature, session) {
                (Some(l), Some(s)) => format_subtitle(l, s),
                _ => String::new(),
            },
            date_day: day,
            date_month: month,
            date_year: year,
            timestamp_ms,
        })
    }

    /// Legislature period parsed back from the subtitle.
    pub fn legislature(&self) -> Option<u32> {
        self.subtitle
            .split_once(".Wahlperiode__")
            .and_then(|(l, _)| l.parse().ok())
    }

    pub fn session(&self) -> Option<u32> {
        self.subtitle
            .split_once(".Wahlperiode__")
            .and_then(|(_, s)| s.strip_suffix(".Sitzung"))
            .and_then(|s| s.parse().ok())
    }

    pub fn validate(&self) -> Result<()> {
        let expected = timestamp_ms(self.date_day, self.date_month, self.date_year)?;
        if expected != self.timestamp_ms {
            return Err(Error::Invalid(format!(
                "timestamp {} does not match {:02}.{:02}.{}, expected {expected}",
                self.timestamp_ms, self.date_day, self.date_month, self.date_year
            )));
        }
        Ok(())
    }
}

pub fn format_subtitle(legislature: u32, session: u32) -> String {
    format!("{legislature}.Wahlperiode__{session}.Sitzung")
}

pub fn session_title(parliament: &str, day: u32, month: u32, year: i32) -> String {
    format!("{parliament}-Plenarprotokoll vom {day:02}.{month:02}.{year:04}")
}

/// Milliseconds since the epoch at UTC midnight of the given date.
pub fn timestamp_ms(day: u32, month: u32, year: i32) -> Result<i64> {
    let date = NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| Error::Invalid(format!("{day:02}.{month:02}.{year} is not a calendar date")))?;
    Ok(date
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp_millis())
}

/// Inverse of [`timestamp_ms`] for timestamps on a UTC midnight.
pub fn date_from_timestamp(ms: i64) -> Option<(u32, u32, i32)> {
    if ms.rem_euclid(MS_PER_DAY) != 0 {
        return None;
    }
    let date = DateTime::from_timestamp_millis(ms)?.date_naive();
    Some((date.day(), date.month(), date.year()))
}

/// Document-level metadata as carried by the DKPro `DocumentMetaData` type.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMetaData {
    pub language: String,
    pub document_title: String,
    pub document_id: String,
    /// Empty when unset.
    pub document_uri: String,
    /// Empty when unset.
    pub document_base_uri: String,
    pub is_last_segment: bool,
}

impl DocumentMetaData {
    pub fn for_document(document_id: &str) -> Self {
        DocumentMetaData {
            language: "de".into(),
            document_title: String::new(),
            document_id: document_id.into(),
            document_uri: String::new(),
            document_base_uri: String::new(),
            is_last_segment: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.document_uri.is_empty()
            && !self.document_base_uri.is_empty()
            && !self.document_uri.starts_with(&self.document_base_uri)
        {
            return Err(Error::Invalid(format!(
                "document URI `{}` is not below base URI `{}`",
                self.document_uri, self.document_base_uri
            )));
        }
        Ok(())
    }
}

const MONTHS: &[(&str, u32)] = &[
    ("Januar", 1),
    ("Jänner", 1),
    ("Februar", 2),
    ("Feber", 2),
    ("März", 3),
    ("April", 4),
    ("Mai", 5),
    ("Juni", 6),
    ("Juli", 7),
    ("August", 8),
    ("September", 9),
    ("Oktober", 10),
    ("November", 11),
    ("Dezember", 12),
];

static FILENAME_FULL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"_(\d{1,3})_(\d{1,4})_(\d{1,2})\.(\d{1,2})\.(\d{4})").unwrap());
static NUMERIC_DATE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(\d{1,2})\.\s?(\d{1,2})\.\s?(\d{4})\b").unwrap());
static NAMED_DATE: LazyLock<Regex> = LazyLock::new(|| {
    let names: Vec<&str> = MONTHS.iter().map(|(n, _)| *n).collect();
    Regex::new(&format!(r"\b(\d{{1,2}})\.\s*({})\s+(\d{{4}})\b", names.join("|"))).unwrap()
});
static LEGISLATURE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(\d{1,3})\.\s*Wahlperiode\b").unwrap());
static SESSION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d{1,4})\.\s*Sitzung\b").unwrap());
static PROTOCOL_NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"Plenarprotokoll\s+(\d{1,3})\s*/\s*(\d{1,4})\b").unwrap());

fn month_number(name: &str) -> Option<u32> {
    MONTHS.iter().find(|(n, _)| *n == name).map(|(_, m)| *m)
}

fn valid(day: u32, month: u32, year: i32) -> Option<(u32, u32, i32)> {
    NaiveDate::from_ymd_opt(year, month, day).map(|_| (day, month, year))
}

/// Earliest valid date in `text`, numeric or with a German month name.
pub fn find_date(text: &str) -> Option<(u32, u32, i32)> {
    let numeric = NUMERIC_DATE.captures_iter(text).filter_map(|c| {
        let date = valid(c[1].parse().ok()?, c[2].parse().ok()?, c[3].parse().ok()?)?;
        Some((c.get(0)?.start(), date))
    });
    let named = NAMED_DATE.captures_iter(text).filter_map(|c| {
        let date = valid(c[1].parse().ok()?, month_number(&c[2])?, c[3].parse().ok()?)?;
        Some((c.get(0)?.start(), date))
    });
    numeric.chain(named).min_by_key(|(pos, _)| *pos).map(|(_, d)| d)
}

fn find_legislature_session(text: &str) -> (Option<u32>, Option<u32>) {
    if let Some(c) = PROTOCOL_NUMBER.captures(text) {
        return (c[1].parse().ok(), c[2].parse().ok());
    }
    let l = LEGISLATURE.captures(text).and_then(|c| c[1].parse().ok());
    let s = SESSION.captures(text).and_then(|c| c[1].parse().ok());
    (l, s)
}

/// Session metadata from the file name first, then the first page.
pub fn extract_metadata(doc_text: &str, filename: &str, parliament: &str) -> Result<SessionMetadata> {
    let stem = Path::new(filename)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let first_page = doc_text.split(PAGE_SEPARATOR).next().unwrap_or("");

    let mut legislature = None;
    let mut session = None;
    let mut date = None;
    if let Some(c) = FILENAME_FULL.captures(&stem) {
        legislature = c[1].parse().ok();
        session = c[2].parse().ok();
        date = c[3]
            .parse()
            .ok()
            .zip(c[4].parse().ok())
            .zip(c[5].parse().ok())
            .and_then(|((d, m), y)| valid(d, m, y));
    }
    let date = date
        .or_else(|| find_date(&stem))
        .or_else(|| find_date(first_page))
        .ok_or_else(|| Error::MetadataMissing(stem.clone()))?;
    if legislature.is_none() || session.is_none() {
        let (l, s) = find_legislature_session(first_page);
        legislature = legislature.or(l);
        session = session.or(s);
    }
    let (day, month, year) = date;
    SessionMetadata::new(parliament, day, month, year, legislature, session)
}
