//! Abbreviation expansion and text normalization ahead of rewriting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Punctuation kept around abbreviations and by [`normalize`].
pub const PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':'];

const EXTRA_LETTERS: &str = "áâãàéêíóôõúüç";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AbbreviationError {
    #[error("abbreviation must be non-empty and contain no whitespace: `{0}`")]
    InvalidKey(String),
    #[error("expansion for `{0}` is empty")]
    EmptyExpansion(String),
    #[error("abbreviation `{0}` expands to itself")]
    SelfExpansion(String),
    #[error("abbreviation `{0}` already exists")]
    Duplicate(String),
    #[error("line {line}: expected abbrev<TAB>expansion")]
    Malformed { line: usize },
}

/// User-defined abbreviations; keys are stored lowercase.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AbbreviationTable {
    entries: BTreeMap<String, String>,
}

impl AbbreviationTable {
    pub fn new() -> Self {
        Self::default()
    }

    fn check(key: &str, expansion: &str) -> Result<String, AbbreviationError> {
        let key = key.trim().to_lowercase();
        if key.is_empty() || key.chars().any(char::is_whitespace) {
            return Err(AbbreviationError::InvalidKey(key));
        }
        let expansion = expansion.trim();
        if expansion.is_empty() {
            return Err(AbbreviationError::EmptyExpansion(key));
        }
        if expansion.to_lowercase() == key {
            return Err(AbbreviationError::SelfExpansion(key));
        }
        Ok(key)
    }

    /// Adds a new entry, rejecting keys that already exist.
    pub fn insert(&mut self, key: &str, expansion: &str) -> Result<(), AbbreviationError> {
        let key = Self::check(key, expansion)?;
        if self.entries.contains_key(&key) {
            return Err(AbbreviationError::Duplicate(key));
        }
        self.entries.insert(key, expansion.trim().to_owned());
        Ok(())
    }

    /// Adds or replaces an entry.
    pub fn set(&mut self, key: &str, expansion: &str) -> Result<(), AbbreviationError> {
        let key = Self::check(key, expansion)?;
        self.entries.insert(key, expansion.trim().to_owned());
        Ok(())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(&key.trim().to_lowercase())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(&key.to_lowercase()).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads the `abbrev<TAB>expansion` store format.
    pub fn parse(source: &str) -> Result<Self, AbbreviationError> {
        let mut table = AbbreviationTable::new();
        for (idx, line) in source.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, expansion) = line
                .split_once('\t')
                .ok_or(AbbreviationError::Malformed { line: idx + 1 })?;
            table.set(key, expansion)?;
        }
        Ok(table)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}\t{v}");
        }
        out
    }
}

/// Replaces whole whitespace-delimited tokens that match an abbreviation,
/// case-insensitively, keeping leading and trailing punctuation and the
/// original spacing. Expansions are not expanded again.
pub fn expand_abbreviations(text: &str, table: &AbbreviationTable) -> String {
    if table.is_empty() {
        return text.to_owned();
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while !rest.is_empty() {
        let ws = rest.find(|c: char| !c.is_whitespace()).unwrap_or(rest.len());
        out.push_str(&rest[..ws]);
        rest = &rest[ws..];
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        out.push_str(&expand_token(&rest[..end], table));
        rest = &rest[end..];
    }
    out
}

fn expand_token(token: &str, table: &AbbreviationTable) -> String {
    let core = token.trim_matches(PUNCTUATION);
    if core.is_empty() {
        return token.to_owned();
    }
    match table.get(core) {
        Some(expansion) => {
            let start = token.len() - token.trim_start_matches(PUNCTUATION).len();
            let end = start + core.len();
            format!("{}{}{}", &token[..start], expansion, &token[end..])
        }
        None => token.to_owned(),
    }
}

/// Letters the Portuguese pipeline can speak.
pub fn is_supported_letter(c: char) -> bool {
    c.is_ascii_lowercase() || EXTRA_LETTERS.contains(c)
}

/// Lowercases, maps hyphens to spaces, drops unsupported characters,
/// collapses whitespace and trims.
pub fn normalize(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pending_space = false;
    for c in text.chars().flat_map(char::to_lowercase) {
        if c.is_whitespace() || c == '-' {
            pending_space = !out.is_empty();
        } else if is_supported_letter(c) || PUNCTUATION.contains(&c) {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        } else {
            tracing::debug!(character = %c.escape_unicode(), "dropping unsupported character");
        }
    }
    out
}

/// Turns punctuation into pauses so the rewritten text is purely letters
/// and spaces.
pub fn punctuation_to_pauses(text: &str) -> String {
    let spaced: String = text
        .chars()
        .map(|c| if PUNCTUATION.contains(&c) { ' ' } else { c })
        .collect();
    spaced.split_whitespace().collect::<Vec<_>>().join(" ")
}
