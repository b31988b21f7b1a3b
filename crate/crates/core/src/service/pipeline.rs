//! Text in, `.pho` and WAV out.

use std::path::Path;

use super::error::{ServiceError, Stage};
use super::settings::Settings;
use crate::audiobus::{encode_wav, AudioFormat, SynthBackend};
use crate::phonemes::{assign_prosody, render_pho, tokenize, PhonemeEvent, PhonemeInventory, ProsodyConfig};
use crate::predict::{builtin_portuguese, load_dictionary, Dictionary};
use crate::rules::{parse_rules, RuleSet, SegmentString};
use crate::scanning::KeyboardLayout;
use crate::textprep::{expand_abbreviations, normalize, punctuation_to_pauses, AbbreviationTable};

/// The shipped Portuguese letter-to-sound rules.
pub const PORTUGUESE_RULES: &str = include_str!("../../rules/pt.rules");
/// Only the two rules quoted as examples of the rule format.
pub const EXAMPLE_RULES: &str = include_str!("../../rules/example.rules");

/// Everything one utterance produced, kept so artifacts can be served later.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub text: String,
    pub expanded: String,
    /// Normalized text with punctuation turned into pauses; what was rewritten.
    pub spoken: String,
    pub phonetic: SegmentString,
    pub events: Vec<PhonemeEvent>,
    pub pho: String,
    pub pcm: Vec<i16>,
    pub wav: Vec<u8>,
    pub seed: u64,
}

impl Utterance {
    /// Words the user actually said, for usage counts.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.spoken.split_whitespace()
    }
}

#[derive(Debug, Clone)]
pub struct Pipeline {
    rules: RuleSet,
    inventory: PhonemeInventory,
    prosody: ProsodyConfig,
    synth: SynthBackend,
    format: AudioFormat,
}

impl Pipeline {
    pub fn new(rules: RuleSet, inventory: PhonemeInventory, prosody: ProsodyConfig, synth: SynthBackend) -> Self {
        Pipeline {
            rules,
            inventory,
            prosody,
            synth,
            format: AudioFormat::CANONICAL,
        }
    }

    /// Shipped rules and inventory with the mock synthesizer.
    pub fn portuguese() -> Self {
        Pipeline::new(
            parse_rules(PORTUGUESE_RULES).expect("shipped rules parse"),
            PhonemeInventory::portuguese(),
            ProsodyConfig::default(),
            SynthBackend::default(),
        )
    }

    pub fn from_settings(settings: &Settings) -> Result<Self, ServiceError> {
        let rules = match &settings.rules_path {
            Some(p) => parse_rules(&read(p)?).map_err(|e| ServiceError::invalid(Stage::Settings, format!("{}: {e}", p.display())))?,
            None => parse_rules(PORTUGUESE_RULES).expect("shipped rules parse"),
        };
        let inventory = match &settings.inventory_path {
            Some(p) => PhonemeInventory::parse(&read(p)?)
                .map_err(|e| ServiceError::invalid(Stage::Settings, format!("{}: {e}", p.display())))?,
            None => PhonemeInventory::portuguese(),
        };
        settings
            .prosody
            .validate()
            .map_err(|e| ServiceError::invalid(Stage::Settings, e))?;
        Ok(Pipeline::new(rules, inventory, settings.prosody.clone(), settings.synth_backend.clone()))
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn inventory(&self) -> &PhonemeInventory {
        &self.inventory
    }

    pub fn prosody(&self) -> &ProsodyConfig {
        &self.prosody
    }

    pub fn format(&self) -> AudioFormat {
        self.format
    }

    pub fn with_synth(mut self, synth: SynthBackend) -> Self {
        self.synth = synth;
        self
    }

    pub fn with_prosody(mut self, prosody: ProsodyConfig) -> Self {
        self.prosody = prosody;
        self
    }

    /// Runs every stage up to the encoded WAV. Nothing outside the returned
    /// value is touched, so a failure leaves no trace.
    pub fn run(&self, text: &str, abbreviations: &AbbreviationTable, seed: u64) -> Result<Utterance, ServiceError> {
        let expanded = expand_abbreviations(text, abbreviations);
        let spoken = punctuation_to_pauses(&normalize(&expanded));
        if spoken.is_empty() {
            return Err(ServiceError::invalid(Stage::Normalize, "text is empty after normalization"));
        }
        let phonetic = self.rules.rewrite(&spoken);
        let tokens = tokenize(&phonetic, &self.inventory).map_err(|e| ServiceError::invalid(Stage::Tokenize, e))?;
        let prosody = ProsodyConfig {
            seed,
            ..self.prosody.clone()
        };
        let events =
            assign_prosody(&tokens, &self.inventory, &prosody).map_err(|e| ServiceError::invalid(Stage::Prosody, e))?;
        let pho = render_pho(&events);
        let pcm = self
            .synth
            .synthesize(&events, &pho, self.format)
            .map_err(|e| ServiceError::internal(Stage::Synthesis, e))?;
        let wav = encode_wav(&pcm, self.format);
        Ok(Utterance {
            text: text.to_owned(),
            expanded,
            spoken,
            phonetic,
            events,
            pho,
            pcm,
            wav,
            seed,
        })
    }
}

fn read(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path)
        .map_err(|e| ServiceError::invalid(Stage::Settings, format!("cannot read {}: {e}", path.display())))
}

/// Layout named by the settings, or the shipped alphabetic one.
pub fn load_layout(settings: &Settings) -> Result<KeyboardLayout, ServiceError> {
    match &settings.layout_path {
        Some(p) => KeyboardLayout::parse(&read(p)?)
            .map_err(|e| ServiceError::invalid(Stage::Settings, format!("{}: {e}", p.display()))),
        None => Ok(KeyboardLayout::default_alphabetic()),
    }
}

/// Word lists named by the settings merged together, or the shipped list.
pub fn load_base_dictionary(settings: &Settings) -> Result<Dictionary, ServiceError> {
    if settings.dictionary_paths.is_empty() {
        return Ok(builtin_portuguese());
    }
    let mut dict = Dictionary::new();
    for p in &settings.dictionary_paths {
        let words =
            load_dictionary(&read(p)?).map_err(|e| ServiceError::invalid(Stage::Settings, format!("{}: {e}", p.display())))?;
        dict.overlay(&words);
    }
    Ok(dict)
}
