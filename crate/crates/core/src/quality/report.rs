use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::symspell::FrequencyDictionary;
use crate::annotate::AnnotatedDocument;
use crate::error::{Error, Result};
use crate::manifest::closed_enum;

closed_enum!(
    Verdict { Correct => "correct", Wrong => "wrong", Unknown => "unknown" }
);

pub const REPORT_HEADER: [&str; 10] = [
    "key",
    "n_skipped",
    "n_correct",
    "n_wrong",
    "n_unknown",
    "pct_right",
    "pct_wrong",
    "pct_unknown",
    "good_quality",
    "unknown_good_quality",
];

/// Letters only, or letters mixed with digits. Anything else is skipped.
pub fn is_checkable(token: &str) -> bool {
    !token.is_empty()
        && token.chars().all(char::is_alphanumeric)
        && token.chars().any(char::is_alphabetic)
}

/// Correct when the top suggestion is the token itself up to case, wrong
/// when it is another word, unknown when there is no suggestion.
pub fn spellcheck_token(token: &str, dict: &FrequencyDictionary) -> Verdict {
    match dict.lookup(token) {
        None => Verdict::Unknown,
        Some(s) if s.term == token.to_lowercase() => Verdict::Correct,
        Some(_) => Verdict::Wrong,
    }
}

/// Percentages are `None` when their denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub key: String,
    pub n_skipped: u64,
    pub n_correct: u64,
    pub n_wrong: u64,
    pub n_unknown: u64,
    pub pct_right: Option<f64>,
    pub pct_wrong: Option<f64>,
    pub pct_unknown: Option<f64>,
    pub good_quality: Option<f64>,
    pub unknown_good_quality: Option<f64>,
}

/// `100 * part / whole` rounded half away from zero to two decimals, in
/// exact integer arithmetic.
pub fn percent(part: u64, whole: u64) -> Option<f64> {
    if whole == 0 {
        return None;
    }
    let (part, whole) = (part as u128, whole as u128);
    let hundredths = (20_000 * part + whole) / (2 * whole);
    Some(hundredths as f64 / 100.0)
}

impl QualityReport {
    pub fn from_counts(key: impl Into<String>, n_skipped: u64, n_correct: u64, n_wrong: u64, n_unknown: u64) -> Self {
        let checked = n_correct + n_wrong + n_unknown;
        let pct_right = percent(n_correct, checked);
        QualityReport {
            key: key.into(),
            n_skipped,
            n_correct,
            n_wrong,
            n_unknown,
            pct_right,
            pct_wrong: percent(n_wrong, checked),
            pct_unknown: percent(n_unknown, checked),
            good_quality: percent(n_correct, n_correct + n_wrong),
            unknown_good_quality: pct_right,
        }
    }

    pub fn n_checked(&self) -> u64 {
        self.n_correct + self.n_wrong + self.n_unknown
    }

    pub fn with_key(&self, key: impl Into<String>) -> Self {
        Self::from_counts(key, self.n_skipped, self.n_correct, self.n_wrong, self.n_unknown)
    }
}

/// Scores an arbitrary sequence of token strings.
pub fn score_tokens<'a, I>(key: &str, tokens: I, dict: &FrequencyDictionary) -> QualityReport
where
    I: IntoIterator<Item = &'a str>,
{
    let (mut skipped, mut correct, mut wrong, mut unknown) = (0, 0, 0, 0);
    for token in tokens {
        if !is_checkable(token) {
            skipped += 1;
            continue;
        }
        match spellcheck_token(token, dict) {
            Verdict::Correct => correct += 1,
            Verdict::Wrong => wrong += 1,
            Verdict::Unknown => unknown += 1,
        }
    }
    QualityReport::from_counts(key, skipped, correct, wrong, unknown)
}

pub fn score_document(doc: &AnnotatedDocument, dict: &FrequencyDictionary) -> QualityReport {
    let index = doc.char_index();
    score_tokens(
        &doc.document_id,
        doc.tokens.iter().map(|t| index.slice(&doc.sofa, t.span)),
        dict,
    )
}

/// Sums counts per group and recomputes percentages from the sums. Groups
/// come back sorted by key.
pub fn aggregate_reports<F>(reports: &[QualityReport], group_of: F) -> Vec<QualityReport>
where
    F: Fn(&QualityReport) -> String,
{
    let mut groups: BTreeMap<String, [u64; 4]> = BTreeMap::new();
    for r in reports {
        let g = groups.entry(group_of(r)).or_default();
        g[0] += r.n_skipped;
        g[1] += r.n_correct;
        g[2] += r.n_wrong;
        g[3] += r.n_unknown;
    }
    groups
        .into_iter()
        .map(|(key, [s, c, w, u])| QualityReport::from_counts(key, s, c, w, u))
        .collect()
}

fn fmt_pct(p: Option<f64>) -> String {
    p.map(|v| format!("{v:.2}")).unwrap_or_default()
}

/// CSV with one row per report; undefined percentages are empty cells.
pub fn write_reports_to<W: Write>(reports: &[QualityReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::Invalid(format!("cannot write quality report: {e}"));
    w.write_record(REPORT_HEADER).map_err(fail)?;
    for r in reports {
        w.write_record([
            r.key.clone(),
            r.n_skipped.to_string(),
            r.n_correct.to_string(),
            r.n_wrong.to_string(),
            r.n_unknown.to_string(),
            fmt_pct(r.pct_right),
            fmt_pct(r.pct_wrong),
            fmt_pct(r.pct_unknown),
            fmt_pct(r.good_quality),
            fmt_pct(r.unknown_good_quality),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("cannot write quality report: {e}")))
}

pub fn write_reports(reports: &[QualityReport], path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_reports_to(reports, file)
}

/// Reads a report CSV back; percentages are recomputed from the counts.
pub fn read_reports(path: &Path) -> Result<Vec<QualityReport>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        let n = |i: usize| -> Result<u64> {
            row.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Invalid(format!("{}: bad count in column {i}", path.display())))
        };
        out.push(QualityReport::from_counts(&row[0], n(1)?, n(2)?, n(3)?, n(4)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkable_tokens() {
        assert!(is_checkable("Haus"));
        assert!(is_checkable("2a"));
        assert!(is_checkable("Straße"));
        assert!(!is_checkable(","));
        assert!(!is_checkable("3,5"));
        assert!(!is_checkable("1946"));
        assert!(!is_checkable(""));
        assert!(!is_checkable("Baden-Württemberg"));
    }

    #[test]
    fn verdicts() {
        let d = FrequencyDictionary::from_entries([("und", 100u64), ("damen", 5)]).unwrap();
        assert_eq!(spellcheck_token("und", &d), Verdict::Correct);
        assert_eq!(spellcheck_token("Damen", &d), Verdict::Correct);
        assert_eq!(spellcheck_token("umd", &d), Verdict::Wrong);
        assert_eq!(spellcheck_token("xqzzrk", &d), Verdict::Unknown);
    }

    #[test]
    fn bayern_counts() {
        let r = QualityReport::from_counts("Bayern", 0, 8660, 970, 370);
        assert_eq!(r.pct_right, Some(86.60));
        assert_eq!(r.pct_wrong, Some(9.70));
        assert_eq!(r.pct_unknown, Some(3.70));
        assert!((r.good_quality.unwrap() - 89.93).abs() <= 0.02);
        assert_eq!(r.unknown_good_quality, r.pct_right);
    }

    #[test]
    fn empty_is_undefined_not_nan() {
        let r = QualityReport::from_counts("e", 3, 0, 0, 0);
        assert_eq!(r.good_quality, None);
        assert_eq!(r.pct_right, None);
        let r = QualityReport::from_counts("u", 0, 0, 0, 4);
        assert_eq!(r.pct_unknown, Some(100.0));
        assert_eq!(r.good_quality, None);
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(percent(1, 8), Some(12.5));
        assert_eq!(percent(1, 3), Some(33.33));
        assert_eq!(percent(2, 3), Some(66.67));
        assert_eq!(percent(1, 80_000), Some(0.0));
        assert_eq!(percent(1, 40_000), Some(0.0));
        assert_eq!(percent(1, 20_000), Some(0.01));
    }

    #[test]
    fn aggregation_sums_counts() {
        let a = QualityReport::from_counts("a", 0, 9, 1, 0);
        let b = QualityReport::from_counts("b", 0, 0, 0, 10);
        let g = aggregate_reports(&[a.clone(), b], |_| "P".into());
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].good_quality, Some(90.0));
        assert_eq!(g[0].pct_right, Some(45.0));
        assert_eq!(aggregate_reports(std::slice::from_ref(&a), |r| r.key.clone()), vec![a]);
        assert!(aggregate_reports(&[], |r| r.key.clone()).is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        let reports = vec![
            QualityReport::from_counts("x", 1, 2, 3, 4),
            QualityReport::from_counts("y", 0, 0, 0, 0),
        ];
        write_reports(&reports, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(&REPORT_HEADER.join(",")));
        assert!(text.contains("y,0,0,0,0,,,,,"));
        assert_eq!(read_reports(&path).unwrap(), reports);
    }
}
