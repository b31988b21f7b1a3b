//! Single-switch group scanning for the on-screen keyboard.
//!
//! The state machine is pure: callers feed it `tick` events at the scan
//! period and `press` events from the switch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_PERIOD_MS: u32 = 100;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScanError {
    #[error("layout has no groups")]
    NoGroups,
    #[error("group {0} is empty")]
    EmptyGroup(usize),
    #[error("letter `{0}` breaks alphabetic order")]
    NotAlphabetic(char),
    #[error("line {line}: unknown key `{token}`")]
    UnknownKey { line: usize, token: String },
    #[error("scan period must be at least {MIN_PERIOD_MS} ms")]
    PeriodTooShort,
    #[error("max_cycles must be positive")]
    ZeroCycles,
    #[error("state does not fit the layout")]
    InvalidState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Space,
    Backspace,
    Clear,
    Speak,
    TogglePredictions,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Space => "space",
            Action::Backspace => "backspace",
            Action::Clear => "clear",
            Action::Speak => "speak",
            Action::TogglePredictions => "toggle-predictions",
        }
    }
}

impl FromStr for Action {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "space" => Action::Space,
            "backspace" => Action::Backspace,
            "clear" => Action::Clear,
            "speak" => Action::Speak,
            "toggle-predictions" => Action::TogglePredictions,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Key {
    Letter(char),
    Digit(char),
    Punctuation(char),
    Action(Action),
}

impl Key {
    fn parse(token: &str) -> Option<Key> {
        if let Some(name) = token.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
            return name.parse().ok().map(Key::Action);
        }
        let mut chars = token.chars();
        let c = chars.next()?;
        if chars.next().is_some() {
            return None;
        }
        Some(if c.is_alphabetic() {
            Key::Letter(c)
        } else if c.is_ascii_digit() {
            Key::Digit(c)
        } else {
            Key::Punctuation(c)
        })
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Letter(c) | Key::Digit(c) | Key::Punctuation(c) => write!(f, "{c}"),
            Key::Action(a) => write!(f, "<{}>", a.name()),
        }
    }
}

/// Groups of keys, letters in alphabetic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyboardLayout {
    groups: Vec<Vec<Key>>,
}

impl KeyboardLayout {
    pub fn new(groups: Vec<Vec<Key>>) -> Result<Self, ScanError> {
        if groups.is_empty() {
            return Err(ScanError::NoGroups);
        }
        if let Some(i) = groups.iter().position(Vec::is_empty) {
            return Err(ScanError::EmptyGroup(i));
        }
        let mut last: Option<char> = None;
        for key in groups.iter().flatten() {
            if let Key::Letter(c) = key {
                let lc = c.to_lowercase().next().unwrap_or(*c);
                if last.is_some_and(|prev| lc <= prev) {
                    return Err(ScanError::NotAlphabetic(*c));
                }
                last = Some(lc);
            }
        }
        Ok(KeyboardLayout { groups })
    }

    /// One group per line, keys separated by spaces, actions as `<name>`.
    pub fn parse(source: &str) -> Result<Self, ScanError> {
        let mut groups = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line_text = line.trim();
            if line_text.is_empty() || line_text.starts_with('#') {
                continue;
            }
            let group = line_text
                .split_whitespace()
                .map(|t| {
                    Key::parse(t).ok_or_else(|| ScanError::UnknownKey {
                        line: idx + 1,
                        token: t.to_owned(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            groups.push(group);
        }
        KeyboardLayout::new(groups)
    }

    /// Five groups: A-I, J-R, S-Z, digits and punctuation, actions.
    pub fn default_alphabetic() -> Self {
        KeyboardLayout::parse(include_str!("../layouts/pt-alpha.layout")).expect("shipped layout parses")
    }

    pub fn groups(&self) -> &[Vec<Key>] {
        &self.groups
    }

    pub fn max_group_len(&self) -> usize {
        self.groups.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_file_string(&self) -> String {
        self.groups
            .iter()
            .map(|g| g.iter().map(Key::to_string).collect::<Vec<_>>().join(" ") + "\n")
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    /// Cursor dwell per option.
    pub period_ms: u32,
    /// Unanswered sweeps before the scan level resets.
    pub max_cycles: u32,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            period_ms: 1000,
            max_cycles: 3,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<(), ScanError> {
        if self.period_ms < MIN_PERIOD_MS {
            return Err(ScanError::PeriodTooShort);
        }
        if self.max_cycles == 0 {
            return Err(ScanError::ZeroCycles);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ScanMode {
    Idle,
    GroupScan,
    ItemScan { group: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScanState {
    #[serde(flatten)]
    pub mode: ScanMode,
    pub cursor: usize,
    pub cycles_done: u32,
}

impl ScanState {
    fn group_scan() -> Self {
        ScanState {
            mode: ScanMode::GroupScan,
            cursor: 0,
            cycles_done: 0,
        }
    }

    fn idle() -> Self {
        ScanState {
            mode: ScanMode::Idle,
            cursor: 0,
            cycles_done: 0,
        }
    }

    /// Number of options the cursor sweeps in this mode.
    pub fn option_count(&self, layout: &KeyboardLayout) -> usize {
        match self.mode {
            ScanMode::Idle => 0,
            ScanMode::GroupScan => layout.groups.len(),
            ScanMode::ItemScan { group } => layout.groups.get(group).map_or(0, Vec::len),
        }
    }

    pub fn is_valid_for(&self, layout: &KeyboardLayout) -> bool {
        match self.mode {
            ScanMode::Idle => self.cursor == 0,
            _ => self.cursor < self.option_count(layout),
        }
    }

    /// The key under the cursor during item scanning.
    pub fn highlighted_key(&self, layout: &KeyboardLayout) -> Option<Key> {
        match self.mode {
            ScanMode::ItemScan { group } => layout.groups.get(group)?.get(self.cursor).copied(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanEvent {
    Tick,
    Press,
}

pub fn new_session(layout: &KeyboardLayout, config: &ScanConfig) -> Result<ScanState, ScanError> {
    config.validate()?;
    KeyboardLayout::new(layout.groups.clone())?;
    Ok(ScanState::group_scan())
}

/// Advances the machine by one event. Only a press during item scanning
/// emits a key.
pub fn step(state: ScanState, event: ScanEvent, layout: &KeyboardLayout, config: &ScanConfig) -> (ScanState, Option<Key>) {
    match (state.mode, event) {
        (ScanMode::Idle, ScanEvent::Tick) => (state, None),
        (ScanMode::Idle, ScanEvent::Press) => (ScanState::group_scan(), None),
        (ScanMode::GroupScan, ScanEvent::Press) => (
            ScanState {
                mode: ScanMode::ItemScan { group: state.cursor },
                cursor: 0,
                cycles_done: 0,
            },
            None,
        ),
        (ScanMode::ItemScan { .. }, ScanEvent::Press) => {
            (ScanState::group_scan(), state.highlighted_key(layout))
        }
        (mode, ScanEvent::Tick) => {
            let n = state.option_count(layout).max(1);
            let mut next = ScanState {
                cursor: (state.cursor + 1) % n,
                ..state
            };
            if next.cursor == 0 {
                next.cycles_done += 1;
                if next.cycles_done >= config.max_cycles {
                    next = match mode {
                        ScanMode::ItemScan { .. } => ScanState::group_scan(),
                        _ => ScanState::idle(),
                    };
                }
            }
            (next, None)
        }
    }
}

/// Replays `events` from `state`, collecting emitted keys.
pub fn run(
    mut state: ScanState,
    events: impl IntoIterator<Item = ScanEvent>,
    layout: &KeyboardLayout,
    config: &ScanConfig,
) -> (ScanState, Vec<Key>) {
    let mut emitted = Vec::new();
    for ev in events {
        let (next, key) = step(state, ev, layout, config);
        state = next;
        emitted.extend(key);
    }
    (state, emitted)
}
