use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place, so readers see either the old file or the new one.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Reads a file that may not exist yet.
pub fn read_optional(path: &Path) -> io::Result<Option<String>> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e),
    }
}

pub const HOME_ENV: &str = "EASYVOICE_HOME";
pub const SETTINGS_FILE: &str = "settings.toml";
pub const ABBREVIATIONS_FILE: &str = "abbreviations.tsv";
pub const USER_DICTIONARY_FILE: &str = "user_dictionary.txt";

/// `$EASYVOICE_HOME`, or `~/.easyvoice` when unset.
pub fn profile_dir() -> Option<PathBuf> {
    if let Some(dir) = std::env::var_os(HOME_ENV).filter(|v| !v.is_empty()) {
        return Some(PathBuf::from(dir));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".easyvoice"))
}
