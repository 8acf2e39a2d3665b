use unicode_normalization::UnicodeNormalization;

use crate::ocr::PAGE_SEPARATOR;

/// Canonical text form that all offsets are computed against.
///
/// CRLF becomes LF, tabs become spaces, other control characters except LF
/// and form feed are dropped, and the result is NFC-composed.
pub fn normalize_text(raw: &str) -> String {
    let mut cleaned = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\r' if chars.peek() == Some(&'\n') => {}
            '\n' | PAGE_SEPARATOR => cleaned.push(c),
            '\t' => cleaned.push(' '),
            '\u{FFFE}' | '\u{FFFF}' => {}
            c if c.is_control() => {}
            c => cleaned.push(c),
        }
    }
    cleaned.nfc().collect()
}
