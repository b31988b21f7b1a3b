//! Reference implementations and case generators shared by the
//! integration tests. Everything here is written from the rule and ranking
//! descriptions, without reusing library internals.
#![allow(dead_code)]

use easyvoice::rules::{parse_rules_with, Alphabet, RuleSet};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::IndexedRandom;
use rand::Rng;

// ---------------------------------------------------------------------------
// Brute-force rewriter

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tok {
    Vowel,
    Consonant,
    Space,
    Lit(char),
}

impl Tok {
    fn file_token(self) -> String {
        match self {
            Tok::Vowel => "*".into(),
            Tok::Consonant => "+".into(),
            Tok::Space => "-".into(),
            Tok::Lit(c) => c.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleRule {
    pub pattern: String,
    pub replacement: String,
    pub pct: u32,
    pub left: Vec<Tok>,
    pub right: Vec<Tok>,
}

impl OracleRule {
    pub fn to_line(&self) -> String {
        let rep = if self.replacement.is_empty() {
            "\"\"".to_owned()
        } else {
            self.replacement.clone()
        };
        let left: Vec<String> = self.left.iter().map(|t| t.file_token()).collect();
        let right: Vec<String> = self.right.iter().map(|t| t.file_token()).collect();
        format!("{} {} {} {} | {}", self.pattern, rep, self.pct, left.join(" "), right.join(" "))
    }
}

/// The test alphabet: a, e, o are vowels; x, z, k, q consonants; space is
/// space; anything else (like 7) is neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    V,
    C,
    S,
    Other,
}

fn kind(c: char) -> Kind {
    match c {
        'a' | 'e' | 'o' => Kind::V,
        'x' | 'z' | 'k' | 'q' => Kind::C,
        ' ' => Kind::S,
        _ => Kind::Other,
    }
}

pub const INPUT_CHARS: &[char] = &['a', 'e', 'o', 'x', 'z', 'k', 'q', ' ', '7'];
const PATTERN_CHARS: &[char] = &['a', 'e', 'o', 'x', 'z', 'k'];
const LITERALS: &[char] = &['a', 'e', 'o', 'x', 'z', 'k'];

fn tok_ok(t: Tok, c: Option<char>, is_right: bool) -> bool {
    match c {
        None => is_right && t == Tok::Space,
        Some(c) => match t {
            Tok::Vowel => kind(c) == Kind::V,
            Tok::Consonant => kind(c) == Kind::C,
            Tok::Space => kind(c) == Kind::S,
            Tok::Lit(l) => l == c,
        },
    }
}

/// One character of the working string with the percents that scaled it.
#[derive(Debug, Clone)]
struct OChar {
    c: char,
    pcts: Vec<u32>,
    generation: usize,
}

pub struct OracleOutput {
    /// (character, multiplier, generation) per character.
    pub chars: Vec<(char, BigRational, usize)>,
    pub passes: usize,
}

/// Rewrites by the book: whole passes, longest pattern first then file
/// order, left context from what this pass already produced, right context
/// from the unread input, end of string counting as a space.
pub fn brute_rewrite(input: &str, rules: &[OracleRule], loop_limit: usize) -> OracleOutput {
    let mut order: Vec<&OracleRule> = rules.iter().collect();
    // stable, so equal lengths keep file order
    order.sort_by_key(|r| std::cmp::Reverse(r.pattern.chars().count()));

    let mut cur: Vec<OChar> = input
        .chars()
        .map(|c| OChar {
            c,
            pcts: vec![],
            generation: 0,
        })
        .collect();
    let mut passes = 0;
    for _ in 0..loop_limit {
        passes += 1;
        let mut next: Vec<OChar> = Vec::new();
        let mut fired_any = false;
        let mut i = 0;
        while i < cur.len() {
            let mut fired = false;
            for r in &order {
                let pat: Vec<char> = r.pattern.chars().collect();
                if i + pat.len() > cur.len() {
                    continue;
                }
                if (0..pat.len()).any(|k| cur[i + k].c != pat[k]) {
                    continue;
                }
                let left = next.last().map(|o| o.c);
                if !r.left.is_empty() && !r.left.iter().any(|&t| tok_ok(t, left, false)) {
                    continue;
                }
                let right = cur.get(i + pat.len()).map(|o| o.c);
                if !r.right.is_empty() && !r.right.iter().any(|&t| tok_ok(t, right, true)) {
                    continue;
                }
                let g = (0..pat.len()).map(|k| cur[i + k].generation).max().unwrap();
                if g >= loop_limit {
                    continue;
                }
                let mut pcts = cur[i].pcts.clone();
                pcts.push(r.pct);
                for c in r.replacement.chars() {
                    next.push(OChar {
                        c,
                        pcts: pcts.clone(),
                        generation: g + 1,
                    });
                }
                i += pat.len();
                fired = true;
                break;
            }
            if fired {
                fired_any = true;
            } else {
                next.push(cur[i].clone());
                i += 1;
            }
        }
        if !fired_any {
            break;
        }
        cur = next;
    }
    let chars = cur
        .into_iter()
        .map(|o| {
            let mut m = BigRational::from_integer(BigInt::from(1));
            for p in o.pcts {
                m *= BigRational::new(BigInt::from(p), BigInt::from(100));
            }
            (o.c, m, o.generation)
        })
        .collect();
    OracleOutput { chars, passes }
}

pub fn to_ruleset(rules: &[OracleRule], loop_limit: usize) -> RuleSet {
    let src: String = rules.iter().map(|r| r.to_line() + "\n").collect();
    parse_rules_with(&src, Alphabet::portuguese(), loop_limit).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

/// Engine output in the oracle's per-character shape.
pub fn engine_chars(rs: &RuleSet, input: &str) -> (Vec<(char, BigRational, usize)>, usize) {
    let rw = rs.rewrite_traced(input);
    let chars = rw
        .output
        .chars()
        .map(|(c, m, g)| (c, m.ratio().clone(), g))
        .collect();
    (chars, rw.passes)
}

fn random_toks<R: Rng>(rng: &mut R) -> Vec<Tok> {
    let n = [0, 0, 1, 1, 2, 3][rng.random_range(0..6)];
    (0..n)
        .map(|_| match rng.random_range(0..5) {
            0 => Tok::Vowel,
            1 => Tok::Consonant,
            2 => Tok::Space,
            _ => Tok::Lit(*LITERALS.choose(rng).unwrap()),
        })
        .collect()
}

fn random_string<R: Rng>(rng: &mut R, chars: &[char], max: usize) -> String {
    let n = rng.random_range(0..=max);
    (0..n).map(|_| *chars.choose(rng).unwrap()).collect()
}

/// A case for the oracle comparison: input of at most 20 characters and up
/// to four single-character-pattern rules. Replacements of two characters
/// can double the string each pass, so those cases get a loop limit of at
/// most 8; the rest use the default 16.
pub fn random_case<R: Rng>(rng: &mut R) -> (String, Vec<OracleRule>, usize) {
    let input = random_string(rng, INPUT_CHARS, 20);
    let n = rng.random_range(0..=4);
    let long = rng.random_bool(0.3);
    let max_rep = if long { 2 } else { 1 };
    let rules: Vec<OracleRule> = (0..n)
        .map(|_| OracleRule {
            pattern: PATTERN_CHARS.choose(rng).unwrap().to_string(),
            replacement: random_string(rng, PATTERN_CHARS, max_rep),
            pct: rng.random_range(1..=200),
            left: random_toks(rng),
            right: random_toks(rng),
        })
        .collect();
    let limit = if long { rng.random_range(1..=8) } else { 16 };
    (input, rules, limit)
}

/// A self-feeding ruleset: every rule's replacement contains its own
/// pattern, so rewriting only stops at the loop limit.
pub fn random_pathological<R: Rng>(rng: &mut R) -> (String, Vec<OracleRule>) {
    let n = rng.random_range(1..=3);
    let rules: Vec<OracleRule> = (0..n)
        .map(|_| {
            let pat = *PATTERN_CHARS.choose(rng).unwrap();
            let extra = *PATTERN_CHARS.choose(rng).unwrap();
            let replacement = if rng.random_bool(0.5) {
                format!("{pat}{extra}")
            } else {
                format!("{extra}{pat}")
            };
            OracleRule {
                pattern: pat.to_string(),
                replacement,
                pct: rng.random_range(50..=150),
                left: vec![],
                right: vec![],
            }
        })
        .collect();
    let seed_char = rules[0].pattern.chars().next().unwrap();
    let mut input = random_string(rng, INPUT_CHARS, 3);
    input.push(seed_char);
    (input, rules)
}

// ---------------------------------------------------------------------------
// Prediction by filtering and sorting everything

pub fn brute_predict(words: &[(String, u64)], prefix: &str, k: usize) -> Vec<String> {
    let prefix = prefix.to_lowercase();
    let mut hits: Vec<&(String, u64)> = words.iter().filter(|(w, _)| w.starts_with(&prefix)).collect();
    hits.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    hits.into_iter().take(k).map(|(w, _)| w.clone()).collect()
}

// ---------------------------------------------------------------------------
// Archive reference: a plain list, newest first

#[derive(Debug, Default)]
pub struct ReferenceArchive {
    pub texts: Vec<String>,
    pub capacity: usize,
}

impl ReferenceArchive {
    pub fn new(capacity: usize) -> Self {
        ReferenceArchive {
            texts: vec![],
            capacity,
        }
    }

    pub fn speak(&mut self, text: &str) {
        self.texts.retain(|t| t != text);
        self.texts.insert(0, text.to_owned());
        while self.texts.len() > self.capacity {
            self.texts.pop();
        }
    }

    /// False when there is no entry at `index`.
    pub fn respeak(&mut self, index: usize) -> bool {
        if index >= self.texts.len() {
            return false;
        }
        let t = self.texts.remove(index);
        self.texts.insert(0, t);
        true
    }
}
