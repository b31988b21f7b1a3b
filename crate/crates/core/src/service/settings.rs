use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::archive::DEFAULT_ARCHIVE_CAPACITY;
use super::error::{ServiceError, Stage};
use super::persist;
use crate::audiobus::cable::DEFAULT_BUDGET_BYTES;
use crate::audiobus::SynthBackend;
use crate::phonemes::ProsodyConfig;
use crate::scanning::ScanConfig;

pub const DEFAULT_PORT: u16 = 8731;
pub const DEFAULT_CABLE: &str = "easyvoice";

/// Service configuration, stored as TOML. Unset resource paths fall back to
/// the shipped Portuguese rules, inventory, layout and word list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rules_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inventory_path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layout_path: Option<PathBuf>,
    pub dictionary_paths: Vec<PathBuf>,
    pub archive_capacity: usize,
    pub cable_name: String,
    pub cable_budget_bytes: usize,
    /// When set, every utterance uses this seed instead of a fresh one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pin_seed: Option<u64>,
    /// Stops the per-session scan clocks; ticks then only arrive as events.
    pub scan_clock_paused: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ui_dir: Option<PathBuf>,
    pub prosody: ProsodyConfig,
    pub scan: ScanConfig,
    pub synth_backend: SynthBackend,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            rules_path: None,
            inventory_path: None,
            layout_path: None,
            dictionary_paths: Vec::new(),
            archive_capacity: DEFAULT_ARCHIVE_CAPACITY,
            cable_name: DEFAULT_CABLE.to_owned(),
            cable_budget_bytes: DEFAULT_BUDGET_BYTES,
            pin_seed: None,
            scan_clock_paused: false,
            ui_dir: None,
            prosody: ProsodyConfig::default(),
            scan: ScanConfig::default(),
            synth_backend: SynthBackend::default(),
        }
    }
}

fn invalid(message: impl std::fmt::Display) -> ServiceError {
    ServiceError::invalid(Stage::Settings, message)
}

/// Cable names appear in URLs, so keep them to a safe alphabet.
pub fn valid_cable_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Settings {
    pub fn from_toml(source: &str) -> Result<Self, ServiceError> {
        toml::from_str(source).map_err(|e| invalid(e.to_string().trim_end()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize to TOML")
    }

    /// Reads `path` and resolves relative resource paths against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let mut settings = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            settings.resolve_relative(dir);
        }
        Ok(settings)
    }

    pub fn save(&self, path: &Path) -> Result<(), ServiceError> {
        persist::write_atomic(path, self.to_toml().as_bytes())
            .map_err(|e| ServiceError::internal(Stage::Storage, format!("cannot write {}: {e}", path.display())))
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.rules_path, &mut self.inventory_path, &mut self.layout_path, &mut self.ui_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        self.dictionary_paths.iter_mut().for_each(fix);
    }

    /// Checks values and that every referenced file exists. Parsing of the
    /// files themselves happens when the pipeline is built.
    pub fn validate(&self) -> Result<(), ServiceError> {
        self.prosody.validate().map_err(invalid)?;
        self.scan.validate().map_err(invalid)?;
        if self.archive_capacity == 0 {
            return Err(invalid("archive_capacity must be positive"));
        }
        if !valid_cable_name(&self.cable_name) {
            return Err(invalid(format!("bad cable name `{}`", self.cable_name)));
        }
        if self.cable_budget_bytes == 0 {
            return Err(invalid("cable_budget_bytes must be positive"));
        }
        let files = [&self.rules_path, &self.inventory_path, &self.layout_path]
            .into_iter()
            .flatten()
            .chain(&self.dictionary_paths);
        for path in files {
            if !path.is_file() {
                return Err(invalid(format!("missing file {}", path.display())));
            }
        }
        Ok(())
    }
}
