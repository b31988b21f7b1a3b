//! Prefix word prediction ranked by how often the user spoke each word.

use std::cmp::Reverse;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DictionaryError {
    #[error("line {line}: malformed count `{text}`")]
    BadCount { line: usize, text: String },
    #[error("line {line}: words may not contain whitespace")]
    BadWord { line: usize },
    #[error("word is empty")]
    EmptyWord,
    #[error("`{0}` contains whitespace")]
    Whitespace(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WordSource {
    Builtin,
    User,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub use_count: u64,
    pub source: WordSource,
}

/// Lowercase words in a sorted map, so a prefix is a contiguous key range.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    entries: BTreeMap<String, Entry>,
}

fn normalize_word(word: &str) -> String {
    word.trim().to_lowercase()
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<Entry> {
        self.entries.get(&normalize_word(word)).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Entry)> {
        self.entries.iter().map(|(w, e)| (w.as_str(), *e))
    }

    /// Merges `other` into `self`, summing counts of shared words.
    pub fn overlay(&mut self, other: &Dictionary) {
        for (word, entry) in &other.entries {
            self.entries
                .entry(word.clone())
                .and_modify(|e| e.use_count += entry.use_count)
                .or_insert(*entry);
        }
    }

    /// Words starting with `prefix`, by use count descending then word
    /// ascending (code point order), at most `k` of them.
    pub fn predict(&self, prefix: &str, k: usize) -> Vec<String> {
        let prefix = prefix.trim().to_lowercase();
        let mut hits: Vec<(&str, u64)> = self
            .entries
            .range(prefix.clone()..)
            .take_while(|(w, _)| w.starts_with(&prefix))
            .map(|(w, e)| (w.as_str(), e.use_count))
            .collect();
        fn rank<'a>(&(w, c): &(&'a str, u64)) -> (Reverse<u64>, &'a str) {
            (Reverse(c), w)
        }
        if k < hits.len() {
            hits.select_nth_unstable_by_key(k, rank);
            hits.truncate(k);
        }
        hits.sort_unstable_by_key(rank);
        hits.into_iter().map(|(w, _)| w.to_owned()).collect()
    }

    /// Adds a user word with count 0; returns false if it was already present.
    pub fn add_word(&mut self, word: &str) -> Result<bool, DictionaryError> {
        let word = normalize_word(word);
        if word.is_empty() {
            return Err(DictionaryError::EmptyWord);
        }
        if word.contains(char::is_whitespace) {
            return Err(DictionaryError::Whitespace(word));
        }
        if self.entries.contains_key(&word) {
            return Ok(false);
        }
        self.entries.insert(
            word,
            Entry {
                use_count: 0,
                source: WordSource::User,
            },
        );
        Ok(true)
    }

    /// Counts one use of `word`, inserting it as a user word if unknown.
    pub fn record_use(&mut self, word: &str) {
        let word = normalize_word(word);
        if word.is_empty() {
            return;
        }
        self.entries
            .entry(word)
            .or_insert(Entry {
                use_count: 0,
                source: WordSource::User,
            })
            .use_count += 1;
    }

    /// The part worth persisting next to the builtin list: user words and
    /// any word with a nonzero count, as `word<TAB>count` lines.
    pub fn user_overlay_string(&self) -> String {
        let mut out = String::new();
        for (w, e) in &self.entries {
            if e.source == WordSource::User || e.use_count > 0 {
                let _ = writeln!(out, "{w}\t{}", e.use_count);
            }
        }
        out
    }
}

/// Loads a builtin word list.
pub fn load_dictionary(source: &str) -> Result<Dictionary, DictionaryError> {
    load_dictionary_as(source, WordSource::Builtin)
}

/// Parses one word per line with an optional `<TAB>count`; duplicates are
/// merged by summing their counts.
pub fn load_dictionary_as(source: &str, origin: WordSource) -> Result<Dictionary, DictionaryError> {
    let mut dict = Dictionary::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let (word, count) = match raw.split_once('\t') {
            Some((w, c)) => {
                let count = c.trim().parse::<u64>().map_err(|_| DictionaryError::BadCount {
                    line,
                    text: c.to_owned(),
                })?;
                (w, count)
            }
            None => (raw, 0),
        };
        let word = normalize_word(word);
        if word.is_empty() {
            continue;
        }
        if word.chars().any(char::is_whitespace) {
            return Err(DictionaryError::BadWord { line });
        }
        dict.entries
            .entry(word)
            .or_insert(Entry {
                use_count: 0,
                source: origin,
            })
            .use_count += count;
    }
    Ok(dict)
}

/// The shipped Portuguese list.
pub fn builtin_portuguese() -> Dictionary {
    load_dictionary(include_str!("../dict/pt-words.txt")).expect("shipped word list parses")
}
