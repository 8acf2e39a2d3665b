//! Rule-based German tokenizer and sentence splitter.
//!
//! Tokens are whitespace-separated chunks with leading openers and trailing
//! punctuation peeled off. A chunk that is a known abbreviation or a short
//! ordinal (`16.`) keeps its dot. Sentences end after a token made only of
//! `.?!…`, plus any closing quotes glued to it, when the next token follows
//! whitespace and starts with an uppercase letter or an opening quote.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use super::document::{Span, Token};
use crate::error::{Error, Result};

const SHIPPED_ABBREVIATIONS: &str = include_str!("../../data/abbreviations_de.txt");

const OPENERS: &[char] = &['(', '[', '{', '"', '\'', '„', '“', '‚', '‘', '»', '«'];
const TRAILING: &[char] = &[
    '.', ',', ';', ':', '!', '?', ')', ']', '}', '"', '\'', '»', '«', '“', '”', '‘', '’', '…',
];
const CLOSING_QUOTES: &[char] = &['"', '\'', '»', '«', '“', '”', '‘', '’', ')', ']'];
const SENTENCE_START_QUOTES: &[char] = &['"', '\'', '„', '“', '‚', '‘', '»', '«', '('];

#[derive(Debug, Clone)]
pub struct Segmenter {
    abbreviations: HashSet<String>,
}

impl Default for Segmenter {
    fn default() -> Self {
        Segmenter {
            abbreviations: parse_list(SHIPPED_ABBREVIATIONS),
        }
    }
}

fn parse_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

static DEFAULT_SEGMENTER: LazyLock<Segmenter> = LazyLock::new(Segmenter::default);

/// Segments with the shipped abbreviation list.
pub fn segment(text: &str) -> (Vec<Span>, Vec<Token>) {
    DEFAULT_SEGMENTER.segment(text)
}

impl Segmenter {
    /// Shipped list extended by a file with one abbreviation per line.
    pub fn with_abbreviation_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut seg = Segmenter::default();
        seg.abbreviations.extend(parse_list(&text));
        Ok(seg)
    }

    pub fn add_abbreviation(&mut self, abbreviation: &str) {
        self.abbreviations.insert(abbreviation.to_lowercase());
    }

    pub fn is_abbreviation(&self, word: &str) -> bool {
        word.ends_with('.') && self.abbreviations.contains(&word.to_lowercase())
    }

    pub fn segment(&self, text: &str) -> (Vec<Span>, Vec<Token>) {
        let chars: Vec<char> = text.chars().collect();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            while i < chars.len() && !chars[i].is_whitespace() {
                i += 1;
            }
            self.split_chunk(&chars, start, i, &mut tokens);
        }
        let sentences = sentences(&chars, &tokens);
        (sentences, tokens)
    }

    fn split_chunk(&self, chars: &[char], mut begin: usize, mut end: usize, out: &mut Vec<Token>) {
        while end - begin > 1 && OPENERS.contains(&chars[begin]) {
            out.push(Token::new(Span::new(begin, begin + 1)));
            begin += 1;
        }
        let mut trailing = Vec::new();
        while end > begin {
            let core: String = chars[begin..end].iter().collect();
            if self.is_abbreviation(&core) || is_ordinal(&core) {
                break;
            }
            let last = chars[end - 1];
            if !TRAILING.contains(&last) {
                break;
            }
            let mut cut = end - 1;
            if last == '.' {
                while cut > begin && chars[cut - 1] == '.' {
                    cut -= 1;
                }
            }
            trailing.push(Span::new(cut, end));
            end = cut;
        }
        if end > begin {
            out.push(Token::new(Span::new(begin, end)));
        }
        out.extend(trailing.into_iter().rev().map(Token::new));
    }
}

fn is_ordinal(word: &str) -> bool {
    word.strip_suffix('.').is_some_and(|digits| {
        (1..=2).contains(&digits.len()) && digits.bytes().all(|b| b.is_ascii_digit())
    })
}

fn is_terminal(chars: &[char], span: Span) -> bool {
    chars[span.begin..span.end]
        .iter()
        .all(|c| matches!(c, '.' | '?' | '!' | '…'))
}

fn sentences(chars: &[char], tokens: &[Token]) -> Vec<Span> {
    let mut out = Vec::new();
    let mut first = 0;
    let mut t = 0;
    while t < tokens.len() {
        let mut last = t;
        if is_terminal(chars, tokens[t].span) {
            while last + 1 < tokens.len()
                && tokens[last + 1].span.begin == tokens[last].span.end
                && tokens[last + 1].span.len() == 1
                && CLOSING_QUOTES.contains(&chars[tokens[last + 1].span.begin])
            {
                last += 1;
            }
            let breaks = match tokens.get(last + 1) {
                None => true,
                Some(next) => {
                    let c = chars[next.span.begin];
                    next.span.begin > tokens[last].span.end
                        && (c.is_uppercase() || SENTENCE_START_QUOTES.contains(&c))
                }
            };
            if breaks {
                out.push(Span::new(tokens[first].span.begin, tokens[last].span.end));
                first = last + 1;
            }
        }
        t = last + 1;
    }
    if first < tokens.len() {
        out.push(Span::new(tokens[first].span.begin, tokens[tokens.len() - 1].span.end));
    }
    out
}
