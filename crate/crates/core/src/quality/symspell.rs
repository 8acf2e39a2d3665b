//! Symmetric-delete spelling correction (SymSpell), top-1 lookup only.

use std::collections::{HashMap, HashSet};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_EDIT_DISTANCE: usize = 2;
pub const DEFAULT_PREFIX_LENGTH: usize = 7;

const SHIPPED_DICTIONARY: &str = include_str!("../../data/de_frequency.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Suggestion {
    pub term: String,
    pub distance: usize,
    pub frequency: u64,
}

/// Word frequencies plus the delete index used for lookup. Words are stored
/// lowercased; entries that collide after lowercasing have their
/// frequencies summed.
#[derive(Debug, Clone)]
pub struct FrequencyDictionary {
    words: Vec<(String, u64)>,
    index: HashMap<String, usize>,
    /// `(hash of delete, word id)`, sorted.
    deletes: Vec<(u64, u32)>,
    max_word_chars: usize,
    max_edit_distance: usize,
    prefix_length: usize,
}

fn hash_str(s: &str) -> u64 {
    let mut h = DefaultHasher::new();
    s.hash(&mut h);
    h.finish()
}

/// All strings obtained from `word` by deleting up to `depth` characters,
/// the word itself included.
fn deletes_of(word: &[char], depth: usize, out: &mut Vec<String>) {
    let mut frontier = vec![word.to_vec()];
    out.push(word.iter().collect());
    for _ in 0..depth {
        let mut next = Vec::new();
        for w in &frontier {
            for i in 0..w.len() {
                let mut d = w.clone();
                d.remove(i);
                let s: String = d.iter().collect();
                if !out.contains(&s) {
                    out.push(s);
                    next.push(d);
                }
            }
        }
        frontier = next;
    }
}

impl FrequencyDictionary {
    pub fn new(max_edit_distance: usize, prefix_length: usize) -> Result<Self> {
        if prefix_length == 0 || prefix_length <= max_edit_distance {
            return Err(Error::Config(format!(
                "prefix length {prefix_length} must exceed max edit distance {max_edit_distance}"
            )));
        }
        Ok(FrequencyDictionary {
            words: Vec::new(),
            index: HashMap::new(),
            deletes: Vec::new(),
            max_word_chars: 0,
            max_edit_distance,
            prefix_length,
        })
    }

    /// Builds from `(word, frequency)` pairs with default parameters.
    pub fn from_entries<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut dict = Self::new(DEFAULT_MAX_EDIT_DISTANCE, DEFAULT_PREFIX_LENGTH)?;
        dict.extend(entries)?;
        Ok(dict)
    }

    /// The German frequency list compiled into the library.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_DICTIONARY.as_bytes(), DEFAULT_MAX_EDIT_DISTANCE, DEFAULT_PREFIX_LENGTH)
            .expect("shipped dictionary is well formed")
    }

    pub fn load(path: &Path, max_edit_distance: usize, prefix_length: usize) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(file, max_edit_distance, prefix_length)
    }

    /// Reads `word frequency` lines. Blank lines are ignored.
    pub fn parse<R: Read>(reader: R, max_edit_distance: usize, prefix_length: usize) -> Result<Self> {
        let mut entries = Vec::new();
        for (n, line) in BufReader::new(reader).lines().enumerate() {
            let line_no = n + 1;
            let line = line.map_err(|e| Error::Dictionary {
                line: line_no,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(freq), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Dictionary {
                    line: line_no,
                    message: format!("expected `word frequency`, got `{line}`"),
                });
            };
            let freq: u64 = freq.parse().map_err(|_| Error::Dictionary {
                line: line_no,
                message: format!("frequency `{freq}` is not a positive integer"),
            })?;
            if freq == 0 {
                return Err(Error::Dictionary {
                    line: line_no,
                    message: format!("frequency of `{word}` must be positive"),
                });
            }
            entries.push((word.to_string(), freq));
        }
        let mut dict = Self::new(max_edit_distance, prefix_length)?;
        dict.extend(entries)?;
        Ok(dict)
    }

    fn extend<I, S>(&mut self, entries: I) -> Result<()>
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut buf = Vec::new();
        for (word, freq) in entries {
            let word = word.as_ref().to_lowercase();
            if word.is_empty() || freq == 0 {
                return Err(Error::Invalid(format!(
                    "dictionary entries need a word and a positive frequency, got `{word}` {freq}"
                )));
            }
            if let Some(&id) = self.index.get(&word) {
                self.words[id].1 = self.words[id].1.saturating_add(freq);
                continue;
            }
            let id = self.words.len();
            let chars: Vec<char> = word.chars().collect();
            self.max_word_chars = self.max_word_chars.max(chars.len());
            buf.clear();
            let prefix = &chars[..chars.len().min(self.prefix_length)];
            deletes_of(prefix, self.max_edit_distance, &mut buf);
            self.deletes
                .extend(buf.iter().map(|d| (hash_str(d), id as u32)));
            self.index.insert(word.clone(), id);
            self.words.push((word, freq));
        }
        self.deletes.sort_unstable();
        self.deletes.dedup();
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.index.get(&word.to_lowercase()).map(|&i| self.words[i].1)
    }

    pub fn max_edit_distance(&self) -> usize {
        self.max_edit_distance
    }

    pub fn prefix_length(&self) -> usize {
        self.prefix_length
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words.iter().map(|(w, f)| (w.as_str(), *f))
    }

    /// Closest dictionary word within the maximum edit distance. Ties go to
    /// the more frequent word, then to the lexicographically smaller one.
    pub fn lookup(&self, input: &str) -> Option<Suggestion> {
        let input = input.to_lowercase();
        let chars: Vec<char> = input.chars().collect();
        if chars.len() > self.max_word_chars + self.max_edit_distance {
            return None;
        }
        if let Some(&id) = self.index.get(&input) {
            let (term, frequency) = &self.words[id];
            return Some(Suggestion {
                term: term.clone(),
                distance: 0,
                frequency: *frequency,
            });
        }
        let mut candidates = Vec::new();
        let prefix = &chars[..chars.len().min(self.prefix_length)];
        deletes_of(prefix, self.max_edit_distance, &mut candidates);

        let mut checked = HashSet::new();
        let mut best: Option<(usize, u64, u32)> = None;
        for candidate in &candidates {
            let h = hash_str(candidate);
            let start = self.deletes.partition_point(|&(k, _)| k < h);
            for &(k, id) in &self.deletes[start..] {
                if k != h {
                    break;
                }
                if !checked.insert(id) {
                    continue;
                }
                let (word, freq) = &self.words[id as usize];
                let Some(d) = osa_distance(&chars, word, self.max_edit_distance) else {
                    continue;
                };
                let better = match best {
                    None => true,
                    Some((bd, bf, bid)) => {
                        (d, std::cmp::Reverse(*freq), word.as_str())
                            < (bd, std::cmp::Reverse(bf), self.words[bid as usize].0.as_str())
                    }
                };
                if better {
                    best = Some((d, *freq, id));
                }
            }
        }
        best.map(|(distance, frequency, id)| Suggestion {
            term: self.words[id as usize].0.clone(),
            distance,
            frequency,
        })
    }
}

/// Optimal string alignment distance, or `None` when it exceeds `max`.
pub fn osa_distance(a: &[char], b: &str, max: usize) -> Option<usize> {
    let b: Vec<char> = b.chars().collect();
    if a.len().abs_diff(b.len()) > max {
        return None;
    }
    let (n, m) = (a.len(), b.len());
    let mut prev2 = vec![0usize; m + 1];
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut cur = vec![0usize; m + 1];
    for i in 1..=n {
        cur[0] = i;
        let mut row_min = cur[0];
        for j in 1..=m {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (prev[j] + 1).min(cur[j - 1] + 1).min(prev[j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(prev2[j - 2] + 1);
            }
            cur[j] = v;
            row_min = row_min.min(v);
        }
        if row_min > max {
            return None;
        }
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    (prev[m] <= max).then_some(prev[m])
}
