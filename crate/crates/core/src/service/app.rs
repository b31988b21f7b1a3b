use std::collections::{HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use super::archive::{ArchiveEntry, MessageArchive};
use super::error::{ServiceError, Stage};
use super::persist::{self, ABBREVIATIONS_FILE, USER_DICTIONARY_FILE};
use super::pipeline::{load_base_dictionary, load_layout, Pipeline, Utterance};
use super::sessions::SessionStore;
use super::settings::{valid_cable_name, Settings};
use crate::audiobus::{CableHub, Producer, Subscription};
use crate::predict::{load_dictionary_as, Dictionary, WordSource};
use crate::scanning::KeyboardLayout;
use crate::textprep::{AbbreviationError, AbbreviationTable};

/// Utterances kept for artifact download; older ones are forgotten.
pub const UTTERANCE_STORE_LIMIT: usize = 256;

/// Artifacts of one spoken utterance.
#[derive(Debug, Clone)]
pub struct StoredUtterance {
    pub id: String,
    pub text: String,
    pub pho: String,
    pub wav: Vec<u8>,
    pub seed: u64,
}

/// Settings together with everything built from them; swapped as a unit.
#[derive(Debug)]
pub(crate) struct Loaded {
    pub settings: Settings,
    pub pipeline: Pipeline,
    pub layout: KeyboardLayout,
}

impl Loaded {
    fn build(settings: Settings) -> Result<(Self, Dictionary), ServiceError> {
        settings.validate()?;
        let pipeline = Pipeline::from_settings(&settings)?;
        let layout = load_layout(&settings)?;
        let base = load_base_dictionary(&settings)?;
        Ok((
            Loaded {
                settings,
                pipeline,
                layout,
            },
            base,
        ))
    }
}

#[derive(Debug)]
pub struct Service {
    loaded: RwLock<Arc<Loaded>>,
    settings_path: Option<PathBuf>,
    data_dir: Option<PathBuf>,
    archive: Mutex<MessageArchive>,
    abbreviations: RwLock<AbbreviationTable>,
    dictionary: RwLock<Dictionary>,
    utterances: Mutex<VecDeque<Arc<StoredUtterance>>>,
    cables: CableHub,
    producers: Mutex<HashMap<String, Arc<Producer>>>,
    pub(crate) sessions: SessionStore,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn new_id() -> String {
    format!("{:016x}", rand::random::<u64>())
}

fn storage(path: &Path, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::internal(Stage::Storage, format!("{}: {e}", path.display()))
}

impl Service {
    /// A service with no files behind it.
    pub fn in_memory(settings: Settings) -> Result<Arc<Self>, ServiceError> {
        Self::build(settings, None, None)
    }

    /// Loads settings from `settings_path` (defaults if the file is absent)
    /// and the abbreviation table and user dictionary from `data_dir`.
    /// Changes are written back to the same places.
    pub fn open(settings_path: &Path, data_dir: &Path) -> Result<Arc<Self>, ServiceError> {
        let settings = if settings_path.exists() {
            Settings::load(settings_path)?
        } else {
            Settings::default()
        };
        Self::build(settings, Some(settings_path.to_owned()), Some(data_dir.to_owned()))
    }

    fn build(settings: Settings, settings_path: Option<PathBuf>, data_dir: Option<PathBuf>) -> Result<Arc<Self>, ServiceError> {
        let (loaded, mut dictionary) = Loaded::build(settings)?;
        let mut abbreviations = AbbreviationTable::new();
        if let Some(dir) = &data_dir {
            let path = dir.join(ABBREVIATIONS_FILE);
            if let Some(text) = persist::read_optional(&path).map_err(|e| storage(&path, e))? {
                abbreviations = AbbreviationTable::parse(&text)
                    .map_err(|e| ServiceError::invalid(Stage::Abbreviations, format!("{}: {e}", path.display())))?;
            }
            let path = dir.join(USER_DICTIONARY_FILE);
            if let Some(text) = persist::read_optional(&path).map_err(|e| storage(&path, e))? {
                let user = load_dictionary_as(&text, WordSource::User)
                    .map_err(|e| ServiceError::invalid(Stage::Dictionary, format!("{}: {e}", path.display())))?;
                dictionary.overlay(&user);
            }
        }
        let service = Service {
            archive: Mutex::new(MessageArchive::new(loaded.settings.archive_capacity)),
            loaded: RwLock::new(Arc::new(loaded)),
            settings_path,
            data_dir,
            abbreviations: RwLock::new(abbreviations),
            dictionary: RwLock::new(dictionary),
            utterances: Mutex::new(VecDeque::new()),
            cables: CableHub::new(),
            producers: Mutex::new(HashMap::new()),
            sessions: SessionStore::default(),
        };
        let cable = service.settings().cable_name.clone();
        service.producer(&cable)?;
        Ok(Arc::new(service))
    }

    pub(crate) fn loaded(&self) -> Arc<Loaded> {
        self.loaded.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn settings(&self) -> Settings {
        self.loaded().settings.clone()
    }

    pub fn layout(&self) -> KeyboardLayout {
        self.loaded().layout.clone()
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    pub fn ui_dir(&self) -> Option<PathBuf> {
        self.settings()
            .ui_dir
            .or_else(|| self.data_dir.as_ref().map(|d| d.join("ui")))
    }

    // ---- speaking ----

    pub fn speak(&self, text: &str) -> Result<String, ServiceError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ServiceError::invalid(Stage::Request, "text is empty"));
        }
        self.speak_and_record(text)
    }

    /// Speaks an archive entry again, addressed by id or by position.
    pub fn respeak(&self, key: &str) -> Result<String, ServiceError> {
        let text = {
            let archive = lock(&self.archive);
            let pos = archive
                .position_of_id(key)
                .or_else(|| key.parse::<usize>().ok().filter(|&i| i < archive.len()))
                .ok_or_else(|| ServiceError::not_found(Stage::Archive, format!("no archive entry `{key}`")))?;
            archive.get(pos).expect("position in range").text.clone()
        };
        self.speak_and_record(&text)
    }

    fn speak_and_record(&self, text: &str) -> Result<String, ServiceError> {
        let loaded = self.loaded();
        let seed = loaded.settings.pin_seed.unwrap_or_else(rand::random);
        let abbreviations = self.abbreviations.read().unwrap_or_else(|e| e.into_inner()).clone();
        let utt = loaded.pipeline.run(text, &abbreviations, seed)?;

        let producer = self.producer(&loaded.settings.cable_name)?;
        producer.publish_pcm(&utt.pcm, loaded.pipeline.format());

        let id = new_id();
        self.store_utterance(&id, &utt);
        lock(&self.archive).record(&id, text, now_ms());
        self.record_words(&utt);
        Ok(id)
    }

    fn store_utterance(&self, id: &str, utt: &Utterance) {
        let mut store = lock(&self.utterances);
        store.push_front(Arc::new(StoredUtterance {
            id: id.to_owned(),
            text: utt.text.clone(),
            pho: utt.pho.clone(),
            wav: utt.wav.clone(),
            seed: utt.seed,
        }));
        store.truncate(UTTERANCE_STORE_LIMIT);
    }

    fn record_words(&self, utt: &Utterance) {
        let overlay = {
            let mut dict = self.dictionary.write().unwrap_or_else(|e| e.into_inner());
            for w in utt.words() {
                dict.record_use(w);
            }
            dict.user_overlay_string()
        };
        if let Some(dir) = &self.data_dir {
            let path = dir.join(USER_DICTIONARY_FILE);
            if let Err(e) = persist::write_atomic(&path, overlay.as_bytes()) {
                tracing::warn!(path = %path.display(), error = %e, "could not save user dictionary");
            }
        }
    }

    pub fn utterance(&self, id: &str) -> Result<Arc<StoredUtterance>, ServiceError> {
        lock(&self.utterances)
            .iter()
            .find(|u| u.id == id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(Stage::Utterance, format!("no utterance `{id}`")))
    }

    pub fn archive(&self) -> (Vec<ArchiveEntry>, usize) {
        let a = lock(&self.archive);
        (a.entries().cloned().collect(), a.capacity())
    }

    // ---- prediction and dictionary ----

    pub fn predict(&self, prefix: &str, k: usize) -> Vec<String> {
        self.dictionary.read().unwrap_or_else(|e| e.into_inner()).predict(prefix, k)
    }

    /// Returns whether the word was new.
    pub fn add_word(&self, word: &str) -> Result<bool, ServiceError> {
        let (added, overlay) = {
            let mut dict = self.dictionary.write().unwrap_or_else(|e| e.into_inner());
            let added = dict
                .add_word(word)
                .map_err(|e| ServiceError::invalid(Stage::Dictionary, e))?;
            (added, dict.user_overlay_string())
        };
        if added {
            self.save(USER_DICTIONARY_FILE, &overlay)?;
        }
        Ok(added)
    }

    // ---- abbreviations ----

    pub fn abbreviations(&self) -> Vec<(String, String)> {
        self.abbreviations
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .iter()
            .map(|(k, v)| (k.to_owned(), v.to_owned()))
            .collect()
    }

    pub fn add_abbreviation(&self, key: &str, expansion: &str) -> Result<(), ServiceError> {
        self.edit_abbreviations(|t| {
            t.insert(key, expansion).map_err(|e| match e {
                AbbreviationError::Duplicate(_) => ServiceError::conflict(Stage::Abbreviations, e),
                _ => ServiceError::invalid(Stage::Abbreviations, e),
            })
        })
    }

    pub fn remove_abbreviation(&self, key: &str) -> Result<(), ServiceError> {
        self.edit_abbreviations(|t| {
            t.remove(key)
                .map(drop)
                .ok_or_else(|| ServiceError::not_found(Stage::Abbreviations, format!("no abbreviation `{key}`")))
        })
    }

    /// Applies `edit` to a copy, saves it, then publishes it; a failed save
    /// leaves the live table unchanged.
    fn edit_abbreviations(
        &self,
        edit: impl FnOnce(&mut AbbreviationTable) -> Result<(), ServiceError>,
    ) -> Result<(), ServiceError> {
        let mut table = self.abbreviations.write().unwrap_or_else(|e| e.into_inner());
        let mut next = table.clone();
        edit(&mut next)?;
        self.save(ABBREVIATIONS_FILE, &next.to_file_string())?;
        *table = next;
        Ok(())
    }

    fn save(&self, file: &str, contents: &str) -> Result<(), ServiceError> {
        if let Some(dir) = &self.data_dir {
            let path = dir.join(file);
            persist::write_atomic(&path, contents.as_bytes()).map_err(|e| storage(&path, e))?;
        }
        Ok(())
    }

    // ---- settings ----

    /// Validates and builds everything for `settings` before swapping it in.
    /// On any error the running configuration is untouched.
    pub fn update_settings(&self, mut settings: Settings) -> Result<Settings, ServiceError> {
        if let Some(dir) = self.settings_path.as_deref().and_then(Path::parent) {
            settings.resolve_relative(dir);
        }
        let (loaded, base) = Loaded::build(settings)?;
        self.producer(&loaded.settings.cable_name)?;
        if let Some(path) = &self.settings_path {
            loaded.settings.save(path)?;
        }

        let mut current = self.loaded.write().unwrap_or_else(|e| e.into_inner());
        if loaded.settings.dictionary_paths != current.settings.dictionary_paths {
            let mut dict = self.dictionary.write().unwrap_or_else(|e| e.into_inner());
            let user = load_dictionary_as(&dict.user_overlay_string(), WordSource::User)
                .expect("overlay text reparses");
            let mut fresh = base;
            fresh.overlay(&user);
            *dict = fresh;
        }
        lock(&self.archive).set_capacity(loaded.settings.archive_capacity);
        let settings = loaded.settings.clone();
        *current = Arc::new(loaded);
        Ok(settings)
    }

    // ---- cables ----

    fn producer(&self, name: &str) -> Result<Arc<Producer>, ServiceError> {
        if !valid_cable_name(name) {
            return Err(ServiceError::invalid(Stage::Publish, format!("bad cable name `{name}`")));
        }
        let mut producers = lock(&self.producers);
        if let Some(p) = producers.get(name) {
            return Ok(p.clone());
        }
        let budget = self.loaded().settings.cable_budget_bytes;
        let producer = Arc::new(
            self.cables
                .create(name, budget)
                .map_err(|e| ServiceError::internal(Stage::Publish, e))?,
        );
        producers.insert(name.to_owned(), producer.clone());
        Ok(producer)
    }

    /// Publishes PCM on a named cable, creating the cable if needed.
    /// Returns the number of consumers attached.
    pub fn publish_pcm(&self, cable: &str, pcm: &[i16]) -> Result<usize, ServiceError> {
        let fmt = self.loaded().pipeline.format();
        Ok(self.producer(cable)?.publish_pcm(pcm, fmt))
    }

    pub fn subscribe(&self, cable: &str) -> Result<Subscription, ServiceError> {
        self.cables
            .subscribe(cable)
            .map_err(|e| ServiceError::not_found(Stage::Publish, e))
    }

    pub fn cable_names(&self) -> Vec<String> {
        self.cables.names()
    }
}
