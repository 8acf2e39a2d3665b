use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{closed_enum, FormatHint, ManifestEntry, ScanQualityHint, ScriptHint};

closed_enum!(
    Classification { Readable => "readable", Scanned => "scanned" }
);

closed_enum!(
    Script { Antiqua => "antiqua", Fraktur => "fraktur" }
);

closed_enum!(
    Provenance { NativeText => "native_text", Ocr => "ocr" }
);

closed_enum!(
    /// Lifecycle stage of a document. Variants are listed in pipeline order
    /// and a record only ever moves forward.
    #[derive(PartialOrd, Ord)]
    State {
        Fetched => "fetched",
        Classified => "classified",
        Imaged => "imaged",
        Extracted => "extracted",
        Annotated => "annotated",
        Packaged => "packaged",
    }
);

impl From<Classification> for Provenance {
    fn from(c: Classification) -> Self {
        match c {
            Classification::Readable => Provenance::NativeText,
            Classification::Scanned => Provenance::Ocr,
        }
    }
}

impl ScriptHint {
    /// Unknown script defaults to antiqua; Fraktur is only used when the
    /// manifest says so.
    pub fn resolve(self) -> Script {
        match self {
            ScriptHint::Fraktur => Script::Fraktur,
            ScriptHint::Antiqua | ScriptHint::Unknown => Script::Antiqua,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub id: String,
    pub parliament: String,
    pub period_label: String,
    pub local_path: PathBuf,
    pub format_hint: FormatHint,
    pub script_hint: ScriptHint,
    pub scan_quality_hint: ScanQualityHint,
    pub classification: Option<Classification>,
    pub script: Option<Script>,
    pub page_count: Option<u32>,
    pub provenance: Option<Provenance>,
    pub state: State,
}

impl DocumentRecord {
    pub fn fetched(entry: &ManifestEntry, local_path: PathBuf) -> Self {
        DocumentRecord {
            id: entry.id.clone(),
            parliament: entry.parliament.clone(),
            period_label: entry.period_label.clone(),
            local_path,
            format_hint: entry.format_hint,
            script_hint: entry.script_hint,
            scan_quality_hint: entry.scan_quality_hint,
            classification: None,
            script: None,
            page_count: None,
            provenance: None,
            state: State::Fetched,
        }
    }

    /// Moves the record to `next`. Moving backwards is an error; staying in
    /// the same state is allowed so stages can be re-run.
    pub fn advance(&mut self, next: State) -> Result<()> {
        if next < self.state {
            return Err(Error::Precondition {
                id: self.id.clone(),
                message: format!("cannot move from state {} back to {}", self.state, next),
            });
        }
        self.state = next;
        Ok(())
    }

    pub fn require_classification(&self, wanted: Classification) -> Result<()> {
        match self.classification {
            Some(c) if c == wanted => Ok(()),
            Some(c) => Err(Error::Precondition {
                id: self.id.clone(),
                message: format!("document is {c}, expected {wanted}"),
            }),
            None => Err(Error::Precondition {
                id: self.id.clone(),
                message: "document has not been classified".into(),
            }),
        }
    }

    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: &str| {
            Err(Error::Invalid(format!("record `{}`: {m}", self.id)))
        };
        if self.state >= State::Classified {
            if self.classification.is_none() || self.script.is_none() {
                return fail("classified record lacks classification or script");
            }
            if self.page_count.is_none_or(|n| n < 1) {
                return fail("classified record needs page_count >= 1");
            }
        }
        match (self.classification, self.provenance) {
            (Some(c), Some(p)) if Provenance::from(c) != p => {
                fail("provenance does not match classification")
            }
            (Some(_), None) | (None, Some(_)) => fail("provenance and classification must be set together"),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry() -> ManifestEntry {
        ManifestEntry {
            id: "x".into(),
            parliament: "Bayern".into(),
            period_label: String::new(),
            locator: "/tmp/x.pdf".into(),
            format_hint: FormatHint::Unknown,
            script_hint: ScriptHint::Unknown,
            scan_quality_hint: ScanQualityHint::Unknown,
        }
    }

    #[test]
    fn states_are_monotone() {
        let mut r = DocumentRecord::fetched(&entry(), "/tmp/x.pdf".into());
        r.advance(State::Classified).unwrap();
        r.advance(State::Classified).unwrap();
        r.advance(State::Packaged).unwrap();
        assert!(r.advance(State::Imaged).is_err());
    }

    #[test]
    fn provenance_follows_classification() {
        assert_eq!(Provenance::from(Classification::Readable), Provenance::NativeText);
        assert_eq!(Provenance::from(Classification::Scanned), Provenance::Ocr);
        let mut r = DocumentRecord::fetched(&entry(), "/tmp/x.pdf".into());
        r.classification = Some(Classification::Scanned);
        r.provenance = Some(Provenance::NativeText);
        assert!(r.check_invariants().is_err());
    }

    #[test]
    fn unknown_script_resolves_to_antiqua() {
        assert_eq!(ScriptHint::Unknown.resolve(), Script::Antiqua);
        assert_eq!(ScriptHint::Fraktur.resolve(), Script::Fraktur);
    }
}
