use std::collections::HashSet;
use std::sync::LazyLock;

use crate::error::{Error, Result};
use crate::ocr::PAGE_SEPARATOR;
use crate::pdf::PdfDocument;
use crate::record::{Classification, DocumentRecord};

const SHIPPED_HYPHENATED_NAMES: &str = include_str!("../../data/hyphenated_names_de.txt");

/// Hyphenated forms that keep their hyphen when split across lines.
#[derive(Debug, Clone)]
pub struct HyphenLexicon {
    forms: HashSet<String>,
}

impl Default for HyphenLexicon {
    fn default() -> Self {
        HyphenLexicon {
            forms: SHIPPED_HYPHENATED_NAMES
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_lowercase)
                .collect(),
        }
    }
}

impl HyphenLexicon {
    pub fn insert(&mut self, form: &str) {
        self.forms.insert(form.to_lowercase());
    }

    pub fn contains(&self, form: &str) -> bool {
        self.forms.contains(&form.to_lowercase())
    }
}

static DEFAULT_LEXICON: LazyLock<HyphenLexicon> = LazyLock::new(HyphenLexicon::default);

/// Text layer of a readable PDF, one form-feed-separated block per page,
/// with line-break hyphenation repaired.
pub fn extract_native_text(record: &DocumentRecord) -> Result<String> {
    record.require_classification(Classification::Readable)?;
    let pdf = PdfDocument::open(&record.id, &record.local_path).map_err(|e| Error::Extraction {
        id: record.id.clone(),
        message: e.to_string(),
    })?;
    let pages = pdf.page_texts().map_err(|e| Error::Extraction {
        id: record.id.clone(),
        message: e.to_string(),
    })?;
    Ok(pages
        .iter()
        .map(|p| dehyphenate(p, &DEFAULT_LEXICON))
        .collect::<Vec<_>>()
        .join(&PAGE_SEPARATOR.to_string()))
}

/// Rejoins words split as `frag-\nment`.
///
/// Both fragments must be alphabetic. The hyphen is kept when the hyphenated
/// form is in the lexicon or the second fragment is capitalised (as in
/// `CDU-Fraktion`); otherwise the fragments are glued together. Leading
/// spaces on the continuation line are dropped along with the newline.
pub fn dehyphenate(text: &str, lexicon: &HyphenLexicon) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '-' && chars.get(i + 1) == Some(&'\n') {
            let left_start = word_start(&chars, i);
            let mut next = i + 2;
            while next < chars.len() && chars[next] == ' ' {
                next += 1;
            }
            let right_end = word_end(&chars, next);
            if left_start < i && right_end > next {
                let left: String = chars[left_start..i].iter().collect();
                let right: String = chars[next..right_end].iter().collect();
                let keep_hyphen = lexicon.contains(&format!("{left}-{right}"))
                    || right.chars().next().is_some_and(char::is_uppercase);
                if keep_hyphen {
                    out.push('-');
                }
                i = next;
                continue;
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

fn word_start(chars: &[char], end: usize) -> usize {
    let mut start = end;
    while start > 0 && chars[start - 1].is_alphabetic() {
        start -= 1;
    }
    start
}

fn word_end(chars: &[char], start: usize) -> usize {
    let mut end = start;
    while end < chars.len() && chars[end].is_alphabetic() {
        end += 1;
    }
    end
}
