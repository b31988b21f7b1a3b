//! Phoneme tokenization, prosody and `.pho` rendering.
//!
//! The `.pho` output has one line per phoneme:
//!
//! ```text
//! <symbol> <duration_ms> [<position_pct> <f0_hz>]...
//! ```
//!
//! Every line, including the last, ends with a single `\n`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rules::{Multiplier, SegmentString};

pub const SILENCE: &str = "_";
pub const DEFAULT_VOWEL_MS: u32 = 120;
pub const DEFAULT_CONSONANT_MS: u32 = 80;
pub const DEFAULT_SILENCE_MS: u32 = 100;

#[derive(Debug, Error, PartialEq)]
pub enum PhonemeError {
    #[error("inventory line {line}: {reason}")]
    Inventory { line: usize, reason: String },
    #[error("cannot tokenize `{ch}` at offset {offset}")]
    Unconsumable { ch: char, offset: usize },
    #[error("symbol `{0}` is not in the inventory")]
    UnknownSymbol(String),
    #[error("pho line {line}: {reason}")]
    Pho { line: usize, reason: String },
    #[error("invalid prosody config: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhoneClass {
    Vowel,
    Consonant,
    Silence,
}

impl PhoneClass {
    fn parse(s: &str) -> Option<PhoneClass> {
        match s {
            "vowel" => Some(PhoneClass::Vowel),
            "consonant" => Some(PhoneClass::Consonant),
            "silence" => Some(PhoneClass::Silence),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhoneInfo {
    pub class: PhoneClass,
    pub base_ms: u32,
}

/// Phoneme symbols with their class and base duration.
#[derive(Debug, Clone, PartialEq)]
pub struct PhonemeInventory {
    symbols: HashMap<String, PhoneInfo>,
    longest: usize,
}

impl PhonemeInventory {
    /// Builds an inventory; the silence symbol `_` is added if missing.
    pub fn new(entries: impl IntoIterator<Item = (String, PhoneInfo)>) -> Self {
        let mut symbols: HashMap<String, PhoneInfo> = entries.into_iter().collect();
        symbols.entry(SILENCE.to_owned()).or_insert(PhoneInfo {
            class: PhoneClass::Silence,
            base_ms: DEFAULT_SILENCE_MS,
        });
        let longest = symbols.keys().map(|s| s.chars().count()).max().unwrap_or(1);
        PhonemeInventory { symbols, longest }
    }

    /// Parses the `symbol<TAB>class<TAB>base_ms` table.
    pub fn parse(source: &str) -> Result<Self, PhonemeError> {
        let mut entries = Vec::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let err = |reason: &str| PhonemeError::Inventory {
                line,
                reason: reason.to_owned(),
            };
            let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
            let [symbol, class, base] = fields[..] else {
                return Err(err("expected symbol<TAB>class<TAB>base_ms"));
            };
            let len = symbol.chars().count();
            if !(1..=2).contains(&len) || symbol.chars().any(char::is_whitespace) {
                return Err(err("symbol must be 1 or 2 non-space characters"));
            }
            let class = PhoneClass::parse(class).ok_or_else(|| err("class must be vowel, consonant or silence"))?;
            let base_ms: u32 = base.parse().map_err(|_| err("base duration is not an integer"))?;
            if base_ms == 0 {
                return Err(err("base duration must be positive"));
            }
            entries.push((symbol.to_owned(), PhoneInfo { class, base_ms }));
        }
        Ok(PhonemeInventory::new(entries))
    }

    /// The SAMPA-style Portuguese table shipped with the crate.
    pub fn portuguese() -> Self {
        PhonemeInventory::parse(include_str!("../inventory/pt.inv")).expect("shipped inventory parses")
    }

    pub fn get(&self, symbol: &str) -> Option<PhoneInfo> {
        self.symbols.get(symbol).copied()
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.symbols.contains_key(symbol)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub symbol: String,
    pub mult: Multiplier,
}

/// Greedy longest-match tokenization. Whitespace becomes the silence symbol;
/// a symbol spanning two segments takes the first segment's multiplier.
pub fn tokenize(s: &SegmentString, inv: &PhonemeInventory) -> Result<Vec<Token>, PhonemeError> {
    let chars: Vec<(char, &Multiplier)> = s.chars().map(|(c, m, _)| (c, m)).collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (c, mult) = chars[i];
        if c.is_whitespace() {
            tokens.push(Token {
                symbol: SILENCE.to_owned(),
                mult: mult.clone(),
            });
            i += 1;
            continue;
        }
        let max = inv.longest.min(chars.len() - i);
        let found = (1..=max).rev().find_map(|len| {
            let window = &chars[i..i + len];
            if window.iter().any(|(c, _)| c.is_whitespace()) {
                return None;
            }
            let candidate: String = window.iter().map(|(c, _)| *c).collect();
            inv.contains(&candidate).then_some((candidate, len))
        });
        let Some((symbol, len)) = found else {
            return Err(PhonemeError::Unconsumable { ch: c, offset: i });
        };
        tokens.push(Token {
            symbol,
            mult: mult.clone(),
        });
        i += len;
    }
    Ok(tokens)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProsodyConfig {
    pub base_f0_hz: f64,
    /// Pitch jitter as a percentage of `base_f0_hz`, 0 to 50.
    pub jitter_pct: f64,
    /// Values above 1 speak faster.
    pub speed_factor: f64,
    pub seed: u64,
}

impl Default for ProsodyConfig {
    fn default() -> Self {
        ProsodyConfig {
            base_f0_hz: 120.0,
            jitter_pct: 10.0,
            speed_factor: 1.0,
            seed: 0,
        }
    }
}

impl ProsodyConfig {
    pub fn validate(&self) -> Result<(), PhonemeError> {
        if !(self.base_f0_hz.is_finite() && self.base_f0_hz > 0.0) {
            return Err(PhonemeError::Config("base_f0_hz must be positive"));
        }
        if !(0.0..=50.0).contains(&self.jitter_pct) {
            return Err(PhonemeError::Config("jitter_pct must be within 0..=50"));
        }
        if !(self.speed_factor.is_finite() && self.speed_factor > 0.0) {
            return Err(PhonemeError::Config("speed_factor must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchPoint {
    pub position_pct: u8,
    pub f0_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhonemeEvent {
    pub symbol: String,
    pub duration_ms: u32,
    pub pitch_points: Vec<PitchPoint>,
}

impl PhonemeEvent {
    pub fn new(symbol: &str, duration_ms: u32) -> Self {
        PhonemeEvent {
            symbol: symbol.to_owned(),
            duration_ms,
            pitch_points: Vec::new(),
        }
    }

    pub fn with_pitch(mut self, position_pct: u8, f0_hz: f64) -> Self {
        self.pitch_points.push(PitchPoint { position_pct, f0_hz });
        self
    }
}

/// `round(base_ms × mult ÷ speed)`, halves rounding up, never below 1 ms.
pub fn scaled_duration(base_ms: u32, mult: &Multiplier, speed_factor: f64) -> u32 {
    let exact = BigRational::from_integer(BigInt::from(base_ms)) * mult.ratio();
    let ms = if speed_factor == 1.0 {
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        (exact + half).floor().to_integer().to_u64().unwrap_or(u64::MAX)
    } else {
        let value = exact.to_f64().unwrap_or(f64::INFINITY) / speed_factor;
        (value + 0.5).floor().min(u32::MAX as f64) as u64
    };
    u32::try_from(ms).unwrap_or(u32::MAX).max(1)
}

/// Durations from the inventory and a seeded pitch draw.
///
/// The generator is ChaCha8 seeded with `cfg.seed`; exactly one uniform draw
/// from `[-jitter, +jitter]` is taken per vowel, in event order, and none when
/// the jitter is zero. This ordering is stable across releases so recorded
/// audio stays reproducible.
pub fn assign_prosody(
    tokens: &[Token],
    inv: &PhonemeInventory,
    cfg: &ProsodyConfig,
) -> Result<Vec<PhonemeEvent>, PhonemeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter = cfg.jitter_pct / 100.0;
    tokens
        .iter()
        .map(|tok| {
            let info = inv
                .get(&tok.symbol)
                .ok_or_else(|| PhonemeError::UnknownSymbol(tok.symbol.clone()))?;
            let mut event = PhonemeEvent::new(&tok.symbol, scaled_duration(info.base_ms, &tok.mult, cfg.speed_factor));
            if info.class == PhoneClass::Vowel {
                let u = if jitter > 0.0 {
                    rng.random_range(-jitter..=jitter)
                } else {
                    0.0
                };
                event = event.with_pitch(50, cfg.base_f0_hz * (1.0 + u));
            }
            Ok(event)
        })
        .collect()
}

fn round_hz(f0: f64) -> i64 {
    (f0 + 0.5).floor() as i64
}

pub fn render_pho(events: &[PhonemeEvent]) -> String {
    let mut out = String::new();
    for ev in events {
        let _ = write!(out, "{} {}", ev.symbol, ev.duration_ms);
        for p in &ev.pitch_points {
            let _ = write!(out, " {} {}", p.position_pct, round_hz(p.f0_hz));
        }
        out.push('\n');
    }
    out
}

/// Reads `.pho` text back into events. Blank lines and `;` comments are
/// skipped; pitch values come back as the rendered integers.
pub fn parse_pho(source: &str) -> Result<Vec<PhonemeEvent>, PhonemeError> {
    let mut events = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let text = raw.trim();
        if text.is_empty() || text.starts_with(';') {
            continue;
        }
        let err = |reason: &str| PhonemeError::Pho {
            line,
            reason: reason.to_owned(),
        };
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() < 2 || !fields.len().is_multiple_of(2) {
            return Err(err("expected symbol, duration and position/f0 pairs"));
        }
        let duration_ms = fields[1].parse().map_err(|_| err("bad duration"))?;
        let mut event = PhonemeEvent::new(fields[0], duration_ms);
        for pair in fields[2..].chunks(2) {
            let pos: u8 = pair[0].parse().map_err(|_| err("bad pitch position"))?;
            let f0: f64 = pair[1].parse().map_err(|_| err("bad pitch value"))?;
            if pos > 100 || f0 <= 0.0 {
                return Err(err("pitch point out of range"));
            }
            event = event.with_pitch(pos, f0);
        }
        events.push(event);
    }
    Ok(events)
}

/// Total of `duration_ms` over `events`.
pub fn total_duration_ms(events: &[PhonemeEvent]) -> u64 {
    events.iter().map(|e| u64::from(e.duration_ms)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Segment;

    fn segs(parts: &[(&str, Multiplier)]) -> SegmentString {
        SegmentString::from_segments(
            parts
                .iter()
                .map(|(t, m)| Segment {
                    text: (*t).to_owned(),
                    mult: m.clone(),
                    generation: 0,
                })
                .collect(),
        )
    }

    fn symbols(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.symbol.as_str()).collect()
    }

    #[test]
    fn tokenizes_published_output() {
        let inv = PhonemeInventory::portuguese();
        let toks = tokenize(&segs(&[("k@", Multiplier::one())]), &inv).unwrap();
        assert_eq!(symbols(&toks), ["k", "@"]);
        assert!(toks.iter().all(|t| t.mult.is_one()));

        let toks = tokenize(&segs(&[(" ", Multiplier::one())]), &inv).unwrap();
        assert_eq!(symbols(&toks), ["_"]);
    }

    #[test]
    fn greedy_longest_match() {
        let inv = PhonemeInventory::portuguese();
        let sixty = Multiplier::from_percent(60);
        let toks = tokenize(&segs(&[("o~a", sixty.clone())]), &inv).unwrap();
        assert_eq!(symbols(&toks), ["o~", "a"]);
        assert!(toks.iter().all(|t| t.mult == sixty));
    }

    #[test]
    fn spanning_symbol_takes_first_multiplier() {
        let inv = PhonemeInventory::portuguese();
        let toks = tokenize(
            &segs(&[("o", Multiplier::from_percent(50)), ("~", Multiplier::one())]),
            &inv,
        )
        .unwrap();
        assert_eq!(symbols(&toks), ["o~"]);
        assert_eq!(toks[0].mult, Multiplier::from_percent(50));
    }

    #[test]
    fn unconsumable_character_is_reported() {
        let inv = PhonemeInventory::portuguese();
        let err = tokenize(&segs(&[("ka7", Multiplier::one())]), &inv).unwrap_err();
        assert_eq!(err, PhonemeError::Unconsumable { ch: '7', offset: 2 });
    }

    #[test]
    fn inventory_parse_errors() {
        assert!(PhonemeInventory::parse("a\tvowel").is_err());
        assert!(PhonemeInventory::parse("a\tnoise\t10").is_err());
        assert!(PhonemeInventory::parse("a\tvowel\t0").is_err());
        assert!(PhonemeInventory::parse("abc\tvowel\t10").is_err());
        let inv = PhonemeInventory::parse("# c\na\tvowel\t90\n").unwrap();
        assert_eq!(inv.get("a").unwrap().base_ms, 90);
        assert_eq!(inv.get("_").unwrap().class, PhoneClass::Silence);
    }

    #[test]
    fn zero_jitter_vowel() {
        let inv = PhonemeInventory::portuguese();
        let cfg = ProsodyConfig {
            jitter_pct: 0.0,
            ..ProsodyConfig::default()
        };
        let toks = [Token {
            symbol: "a".into(),
            mult: Multiplier::one(),
        }];
        let ev = assign_prosody(&toks, &inv, &cfg).unwrap();
        assert_eq!(ev, vec![PhonemeEvent::new("a", 120).with_pitch(50, 120.0)]);
    }

    #[test]
    fn sixty_percent_consonant() {
        let inv = PhonemeInventory::portuguese();
        let toks = [Token {
            symbol: "z".into(),
            mult: Multiplier::from_percent(60),
        }];
        let ev = assign_prosody(&toks, &inv, &ProsodyConfig::default()).unwrap();
        assert_eq!(ev, vec![PhonemeEvent::new("z", 48)]);
    }

    #[test]
    fn duration_rounding() {
        assert_eq!(scaled_duration(80, &Multiplier::from_percent(60), 1.0), 48);
        // 5 × 1/2 = 2.5 rounds up
        assert_eq!(scaled_duration(5, &Multiplier::from_ratio(1, 2), 1.0), 3);
        assert_eq!(scaled_duration(7, &Multiplier::from_ratio(1, 3), 1.0), 2);
        assert_eq!(scaled_duration(1, &Multiplier::from_percent(1), 1.0), 1);
        assert_eq!(scaled_duration(120, &Multiplier::one(), 2.0), 60);
        assert_eq!(scaled_duration(100, &Multiplier::one(), 0.8), 125);
    }

    #[test]
    fn seeded_pitch_is_reproducible() {
        let inv = PhonemeInventory::portuguese();
        let toks: Vec<Token> = ["a", "k", "e", "o"]
            .iter()
            .map(|s| Token {
                symbol: (*s).into(),
                mult: Multiplier::one(),
            })
            .collect();
        let cfg = ProsodyConfig {
            seed: 42,
            ..ProsodyConfig::default()
        };
        let a = assign_prosody(&toks, &inv, &cfg).unwrap();
        let b = assign_prosody(&toks, &inv, &cfg).unwrap();
        assert_eq!(a, b);
        for ev in &a {
            for p in &ev.pitch_points {
                assert!((108.0..=132.0).contains(&p.f0_hz), "{}", p.f0_hz);
            }
        }
        assert!(a[1].pitch_points.is_empty());
        let c = assign_prosody(&toks, &inv, &ProsodyConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn render_lines() {
        assert_eq!(render_pho(&[PhonemeEvent::new("k", 100)]), "k 100\n");
        assert_eq!(
            render_pho(&[PhonemeEvent::new("@", 120).with_pitch(50, 118.0)]),
            "@ 120 50 118\n"
        );
        assert_eq!(render_pho(&[]), "");
        assert_eq!(
            render_pho(&[PhonemeEvent::new("a", 10).with_pitch(50, 117.5)]),
            "a 10 50 118\n"
        );
    }

    #[test]
    fn pho_parses_back() {
        let events = vec![
            PhonemeEvent::new("k", 80),
            PhonemeEvent::new("@", 120).with_pitch(50, 118.0),
            PhonemeEvent::new("_", 100),
        ];
        assert_eq!(parse_pho(&render_pho(&events)).unwrap(), events);
        assert!(parse_pho("a x").is_err());
        assert!(parse_pho("a 10 50").is_err());
    }
}
