//! Context-sensitive letter-to-sound rewriting.
//!
//! A rule file holds one rule per line:
//!
//! ```text
//! <pattern> <replacement> <duration_pct> [<left_ctx>...] | [<right_ctx>...]
//! ```
//!
//! Context tokens are `*` (any vowel), `+` (any consonant), `-` (a space) or a
//! single literal character. `""` stands for an empty replacement. Blank lines
//! and lines starting with `#` are ignored.
//!
//! Rewriting runs repeated left-to-right passes over the working string until a
//! pass changes nothing or the loop limit is reached. At each position the
//! longest matching pattern wins, ties going to the earlier line. Once a rule
//! fires the cursor moves past its replacement, so a replacement is only
//! looked at again in the next pass.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Mul;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

pub const DEFAULT_LOOP_LIMIT: usize = 16;

/// Token used in rule files for an empty replacement.
pub const EMPTY_REPLACEMENT: &str = "\"\"";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}: malformed rule `{text}`: {reason}")]
    Malformed {
        line: usize,
        text: String,
        reason: &'static str,
    },
    #[error("line {line}: duration percent must be positive, got {value}")]
    DurationRange { line: usize, value: i64 },
    #[error("character `{0}` is listed as both vowel and consonant")]
    AmbiguousAlphabet(char),
    #[error("loop limit must be positive")]
    ZeroLoopLimit,
}

/// Broad class of a single character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CharKind {
    Vowel,
    Consonant,
    Space,
    Other,
}

/// One context constraint on the character next to a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CharClass {
    Vowel,
    Consonant,
    Space,
    Literal(char),
    /// Any character at all; never matches a string boundary.
    Any,
}

impl CharClass {
    fn from_token(token: &str) -> Option<CharClass> {
        let mut chars = token.chars();
        let c = chars.next()?;
        if chars.next().is_some() {
            return None;
        }
        Some(match c {
            '*' => CharClass::Vowel,
            '+' => CharClass::Consonant,
            '-' => CharClass::Space,
            c => CharClass::Literal(c.to_lowercase().next().unwrap_or(c)),
        })
    }

    fn accepts(self, c: char, alphabet: &Alphabet) -> bool {
        match self {
            CharClass::Vowel => alphabet.classify(c) == CharKind::Vowel,
            CharClass::Consonant => alphabet.classify(c) == CharKind::Consonant,
            CharClass::Space => alphabet.classify(c) == CharKind::Space,
            CharClass::Literal(l) => l == c,
            CharClass::Any => true,
        }
    }
}

impl fmt::Display for CharClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CharClass::Vowel => f.write_str("*"),
            CharClass::Consonant => f.write_str("+"),
            CharClass::Space => f.write_str("-"),
            CharClass::Literal(c) => write!(f, "{c}"),
            CharClass::Any => f.write_str("<any>"),
        }
    }
}

/// Vowel/consonant table. Whitespace is always [`CharKind::Space`]; anything
/// not listed is [`CharKind::Other`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    vowels: BTreeSet<char>,
    consonants: BTreeSet<char>,
}

impl Alphabet {
    pub fn new(
        vowels: impl IntoIterator<Item = char>,
        consonants: impl IntoIterator<Item = char>,
    ) -> Result<Self, RuleError> {
        let vowels: BTreeSet<char> = vowels.into_iter().collect();
        let consonants: BTreeSet<char> = consonants.into_iter().collect();
        if let Some(&c) = vowels
            .intersection(&consonants)
            .next()
            .or_else(|| vowels.iter().chain(&consonants).find(|c| c.is_whitespace()))
        {
            return Err(RuleError::AmbiguousAlphabet(c));
        }
        Ok(Alphabet { vowels, consonants })
    }

    /// Portuguese letters plus the SAMPA-style symbols the shipped rules emit,
    /// so contexts keep working on partially rewritten text.
    pub fn portuguese() -> Self {
        Alphabet::new(
            "aeiouyáâãàéêíóôõúü@6EO".chars(),
            "bcçdfghjklmnpqrstvwxzSZLRJ".chars(),
        )
        .expect("static table is unambiguous")
    }

    pub fn classify(&self, c: char) -> CharKind {
        if c.is_whitespace() {
            CharKind::Space
        } else if self.vowels.contains(&c) {
            CharKind::Vowel
        } else if self.consonants.contains(&c) {
            CharKind::Consonant
        } else {
            CharKind::Other
        }
    }

    /// True for characters the table knows about (vowel, consonant or space).
    pub fn contains(&self, c: char) -> bool {
        self.classify(c) != CharKind::Other
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Alphabet::portuguese()
    }
}

/// Exact duration multiplier, the product of the percents of every rule that
/// contributed to a segment. Shared, so cloning is cheap.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiplier(Arc<BigRational>);

impl Multiplier {
    pub fn one() -> Self {
        Multiplier(Arc::new(BigRational::one()))
    }

    pub fn from_percent(pct: u32) -> Self {
        Multiplier(Arc::new(BigRational::new(BigInt::from(pct), BigInt::from(100))))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Self {
        Multiplier(Arc::new(BigRational::new(BigInt::from(numer), BigInt::from(denom))))
    }

    pub fn ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl Default for Multiplier {
    fn default() -> Self {
        Multiplier::one()
    }
}

impl Mul<&Multiplier> for &Multiplier {
    type Output = Multiplier;

    fn mul(self, rhs: &Multiplier) -> Multiplier {
        Multiplier(Arc::new(&*self.0 * &*rhs.0))
    }
}

impl fmt::Display for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub pattern: String,
    pub replacement: String,
    pub duration_pct: u32,
    pub left_ctx: BTreeSet<CharClass>,
    pub right_ctx: BTreeSet<CharClass>,
    /// 1-based line in the source file, 0 for rules built in code.
    pub line: usize,
}

impl Rule {
    pub fn new(pattern: &str, replacement: &str, duration_pct: u32) -> Self {
        Rule {
            pattern: pattern.to_lowercase(),
            replacement: replacement.to_owned(),
            duration_pct,
            left_ctx: BTreeSet::new(),
            right_ctx: BTreeSet::new(),
            line: 0,
        }
    }

    pub fn with_left(mut self, ctx: impl IntoIterator<Item = CharClass>) -> Self {
        self.left_ctx.extend(ctx);
        self
    }

    pub fn with_right(mut self, ctx: impl IntoIterator<Item = CharClass>) -> Self {
        self.right_ctx.extend(ctx);
        self
    }

    fn pattern_len(&self) -> usize {
        self.pattern.chars().count()
    }

    fn multiplier(&self) -> Multiplier {
        Multiplier::from_percent(self.duration_pct)
    }

    /// Checks the match at `pos` of `chars`, with `left` being the character
    /// before the match in the current working string.
    fn matches(&self, alphabet: &Alphabet, chars: &[char], pos: usize, left: Option<char>) -> bool {
        let len = self.pattern_len();
        if len == 0 || pos + len > chars.len() {
            return false;
        }
        if !self.pattern.chars().eq(chars[pos..pos + len].iter().copied()) {
            return false;
        }
        let left_ok = self.left_ctx.is_empty()
            || left.is_some_and(|c| self.left_ctx.iter().any(|cls| cls.accepts(c, alphabet)));
        if !left_ok {
            return false;
        }
        match chars.get(pos + len) {
            _ if self.right_ctx.is_empty() => true,
            Some(&c) => self.right_ctx.iter().any(|cls| cls.accepts(c, alphabet)),
            // end of string counts as a space
            None => self.right_ctx.contains(&CharClass::Space),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let repl = if self.replacement.is_empty() {
            EMPTY_REPLACEMENT
        } else {
            &self.replacement
        };
        write!(f, "{} {} {}", self.pattern, repl, self.duration_pct)?;
        for c in &self.left_ctx {
            write!(f, " {c}")?;
        }
        f.write_str(" |")?;
        for c in &self.right_ctx {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<Rule>,
    alphabet: Alphabet,
    loop_limit: usize,
    /// Rule indices, longest pattern first, then file order.
    precedence: Vec<usize>,
    multipliers: Vec<Multiplier>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>, alphabet: Alphabet, loop_limit: usize) -> Result<Self, RuleError> {
        if loop_limit == 0 {
            return Err(RuleError::ZeroLoopLimit);
        }
        let mut precedence: Vec<usize> = (0..rules.len()).collect();
        precedence.sort_by_key(|&i| std::cmp::Reverse(rules[i].pattern_len()));
        let multipliers = rules.iter().map(Rule::multiplier).collect();
        Ok(RuleSet {
            rules,
            alphabet,
            loop_limit,
            precedence,
            multipliers,
        })
    }

    pub fn empty() -> Self {
        RuleSet::new(Vec::new(), Alphabet::default(), DEFAULT_LOOP_LIMIT).expect("valid")
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn loop_limit(&self) -> usize {
        self.loop_limit
    }

    pub fn with_loop_limit(self, loop_limit: usize) -> Result<Self, RuleError> {
        RuleSet::new(self.rules, self.alphabet, loop_limit)
    }

    pub fn with_alphabet(self, alphabet: Alphabet) -> Self {
        RuleSet { alphabet, ..self }
    }

    /// True iff `rule` matches `s` at character index `pos`, judging the
    /// left context by the character before `pos` in `s`.
    pub fn matches_at(&self, rule: &Rule, s: &SegmentString, pos: usize) -> bool {
        let chars: Vec<char> = s.text().chars().collect();
        let left = pos.checked_sub(1).and_then(|i| chars.get(i).copied());
        rule.matches(&self.alphabet, &chars, pos, left)
    }

    pub fn rewrite(&self, input: &str) -> SegmentString {
        self.run(input, false).output
    }

    /// Rewrites and records every rule firing.
    pub fn rewrite_traced(&self, input: &str) -> Rewrite {
        self.run(input, true)
    }

    /// Rewrites, recording firings only when `trace` is set.
    pub fn run(&self, input: &str, trace: bool) -> Rewrite {
        let mut segments = SegmentString::from_input(input).segments;
        let mut firings = trace.then(Vec::new);
        let mut passes = 0;
        let mut converged = false;
        while passes < self.loop_limit {
            passes += 1;
            match self.pass(&segments, passes, firings.as_mut()) {
                Some(next) => segments = next,
                None => {
                    converged = true;
                    break;
                }
            }
        }
        Rewrite {
            output: SegmentString { segments },
            passes,
            converged,
            trace: firings.unwrap_or_default(),
        }
    }

    /// One left-to-right pass; `None` when nothing fired.
    fn pass(&self, segs: &[Segment], pass: usize, mut trace: Option<&mut Vec<Firing>>) -> Option<Vec<Segment>> {
        let mut chars = Vec::new();
        let mut owner = Vec::new();
        for (i, seg) in segs.iter().enumerate() {
            for c in seg.text.chars() {
                chars.push(c);
                owner.push(i);
            }
        }

        let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
        // the already-rewritten prefix of the working string
        let mut prefix: Vec<char> = Vec::with_capacity(chars.len());
        let mut open_owner: Option<usize> = None;
        let mut changed = false;
        let mut pos = 0;
        // products already computed this pass, by parent multiplier and rule
        let mut products: HashMap<(*const BigRational, usize), Multiplier> = HashMap::new();

        while pos < chars.len() {
            let fired = self.precedence.iter().find_map(|&i| {
                let rule = &self.rules[i];
                let len = rule.pattern_len();
                if !rule.matches(&self.alphabet, &chars, pos, prefix.last().copied()) {
                    return None;
                }
                let generation = owner[pos..pos + len]
                    .iter()
                    .map(|&o| segs[o].generation)
                    .max()
                    .unwrap_or(0);
                // frozen: another application would exceed the loop limit
                (generation < self.loop_limit).then_some((i, len, generation))
            });

            match fired {
                Some((i, len, generation)) => {
                    let rule = &self.rules[i];
                    let parent = &segs[owner[pos]];
                    if let Some(trace) = trace.as_deref_mut() {
                        trace.push(Firing {
                            pass,
                            line: rule.line,
                            position: prefix.len(),
                            before: chars[pos..pos + len].iter().collect(),
                            after: rule.replacement.clone(),
                        });
                    }
                    if !rule.replacement.is_empty() {
                        out.push(Segment {
                            text: rule.replacement.clone(),
                            mult: products
                                .entry((Arc::as_ptr(&parent.mult.0), i))
                                .or_insert_with(|| &parent.mult * &self.multipliers[i])
                                .clone(),
                            generation: generation + 1,
                        });
                        prefix.extend(rule.replacement.chars());
                    }
                    open_owner = None;
                    changed = true;
                    pos += len;
                }
                None => {
                    let o = owner[pos];
                    match (open_owner, out.last_mut()) {
                        (Some(open), Some(last)) if open == o => last.text.push(chars[pos]),
                        _ => out.push(Segment {
                            text: chars[pos].to_string(),
                            mult: segs[o].mult.clone(),
                            generation: segs[o].generation,
                        }),
                    }
                    open_owner = Some(o);
                    prefix.push(chars[pos]);
                    pos += 1;
                }
            }
        }

        changed.then_some(out)
    }
}

/// One rule application, as reported by [`RuleSet::rewrite_traced`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Firing {
    pub pass: usize,
    pub line: usize,
    /// Character offset in the working string at the moment of firing.
    pub position: usize,
    pub before: String,
    pub after: String,
}

impl fmt::Display for Firing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pass={} line={} pos={} {:?} -> {:?}",
            self.pass, self.line, self.position, self.before, self.after
        )
    }
}

#[derive(Debug, Clone)]
pub struct Rewrite {
    pub output: SegmentString,
    /// Passes executed, including a final pass that changed nothing.
    pub passes: usize,
    /// False when the loop limit cut the rewrite short.
    pub converged: bool,
    /// Empty unless tracing was requested.
    pub trace: Vec<Firing>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub text: String,
    pub mult: Multiplier,
    /// Number of rule applications behind this text.
    pub generation: usize,
}

/// The working string as ordered segments, each remembering how its
/// duration was scaled by the rules that produced it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SegmentString {
    segments: Vec<Segment>,
}

impl SegmentString {
    /// Untouched input: one segment with multiplier 1 (none for empty input).
    pub fn from_input(input: &str) -> Self {
        let segments = if input.is_empty() {
            Vec::new()
        } else {
            vec![Segment {
                text: input.to_owned(),
                mult: Multiplier::one(),
                generation: 0,
            }]
        };
        SegmentString { segments }
    }

    pub fn from_segments(segments: Vec<Segment>) -> Self {
        SegmentString { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn text(&self) -> String {
        self.segments.iter().map(|s| s.text.as_str()).collect()
    }

    /// Per-character view: every character with its segment's multiplier
    /// and generation.
    pub fn chars(&self) -> impl Iterator<Item = (char, &Multiplier, usize)> + '_ {
        self.segments
            .iter()
            .flat_map(|s| s.text.chars().map(move |c| (c, &s.mult, s.generation)))
    }
}

impl fmt::Display for SegmentString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            writeln!(f, "{:?}\t{}\t{}", seg.text, seg.mult, seg.generation)?;
        }
        Ok(())
    }
}

/// Parses a rule file with the Portuguese alphabet and the default loop limit.
pub fn parse_rules(source: &str) -> Result<RuleSet, RuleError> {
    parse_rules_with(source, Alphabet::default(), DEFAULT_LOOP_LIMIT)
}

pub fn parse_rules_with(source: &str, alphabet: Alphabet, loop_limit: usize) -> Result<RuleSet, RuleError> {
    let mut rules = Vec::new();
    for (idx, raw) in source.lines().enumerate() {
        let text = raw.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        rules.push(parse_line(text, idx + 1)?);
    }
    RuleSet::new(rules, alphabet, loop_limit)
}

fn parse_line(text: &str, line: usize) -> Result<Rule, RuleError> {
    let malformed = |reason| RuleError::Malformed {
        line,
        text: text.to_owned(),
        reason,
    };
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() < 3 {
        return Err(malformed("expected pattern, replacement and duration"));
    }
    let pattern = tokens[0].to_lowercase();
    let replacement = match tokens[1] {
        EMPTY_REPLACEMENT => String::new(),
        r => r.to_owned(),
    };
    let value: i64 = tokens[2]
        .parse()
        .map_err(|_| malformed("duration percent is not an integer"))?;
    if value <= 0 {
        return Err(RuleError::DurationRange { line, value });
    }
    let duration_pct = u32::try_from(value).map_err(|_| RuleError::DurationRange { line, value })?;

    let ctx = &tokens[3..];
    let (left, right) = match ctx.iter().position(|t| *t == "|") {
        Some(bar) => (&ctx[..bar], &ctx[bar + 1..]),
        None if ctx.is_empty() => (ctx, ctx),
        None => return Err(malformed("context tokens without `|` separator")),
    };
    if right.contains(&"|") {
        return Err(malformed("more than one `|` separator"));
    }
    let parse_ctx = |tokens: &[&str]| -> Result<BTreeSet<CharClass>, RuleError> {
        tokens
            .iter()
            .map(|t| CharClass::from_token(t).ok_or_else(|| malformed("context token must be a single character")))
            .collect()
    };

    Ok(Rule {
        pattern,
        replacement,
        duration_pct,
        left_ctx: parse_ctx(left)?,
        right_ctx: parse_ctx(right)?,
        line,
    })
}
