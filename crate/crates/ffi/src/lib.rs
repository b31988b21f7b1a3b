//! C ABI over the easyvoice core.
//!
//! Objects are opaque handles created by `*_new`/`*_load` functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`EvStatus`]; on failure `ev_last_error_message` describes what went
//! wrong on the calling thread. Strings and buffers handed out by the
//! library are released with `ev_string_free` and `ev_buffer_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use easyvoice::phonemes::{PhonemeInventory, ProsodyConfig};
use easyvoice::predict::{builtin_portuguese, load_dictionary, Dictionary};
use easyvoice::rules::{parse_rules, RuleSet};
use easyvoice::scanning::{new_session, step, KeyboardLayout, ScanConfig, ScanEvent, ScanMode, ScanState};
use easyvoice::service::pipeline::PORTUGUESE_RULES;
use easyvoice::service::Pipeline;
use easyvoice::textprep::AbbreviationTable;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Rules, inventory, word list, layout or abbreviation input was rejected.
    InvalidInput = 3,
    /// A pipeline stage failed; the message names the stage.
    PipelineFailed = 4,
    /// The library panicked; the handle should not be used again.
    Internal = 5,
}

/// Bytes owned by the library.
#[repr(C)]
#[derive(Debug)]
pub struct EvBuffer {
    pub data: *mut u8,
    pub len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvScanEvent {
    Tick = 0,
    Press = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvScanMode {
    Idle = 0,
    GroupScan = 1,
    ItemScan = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvScanState {
    pub mode: EvScanMode,
    /// Group being scanned in item mode, otherwise 0.
    pub group: usize,
    pub cursor: usize,
    pub cycles_done: u32,
}

pub struct EvRuleSet(RuleSet);

pub struct EvPipeline {
    pipeline: Pipeline,
    abbreviations: AbbreviationTable,
}

pub struct EvDictionary(Dictionary);

pub struct EvScanSession {
    state: ScanState,
    layout: KeyboardLayout,
    config: ScanConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl std::fmt::Display) {
    let text = message.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(EvStatus);

fn fail(status: EvStatus, message: impl std::fmt::Display) -> Fail {
    set_error(message);
    Fail(status)
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> EvStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EvStatus::Ok,
        Ok(Err(Fail(status))) => status,
        Err(_) => {
            set_error("internal error");
            EvStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(EvStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(EvStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| fail(EvStatus::NullArgument, format!("{name} is null")))
}

unsafe fn handle_mut<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| fail(EvStatus::NullArgument, format!("{name} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    handle_mut(p, name)
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("nul bytes removed").into_raw()
}

unsafe fn free_box<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Why the most recent call on this thread failed, or null if it succeeded.
/// Valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn ev_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ev_buffer_free(buffer: EvBuffer) {
    if !buffer.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(buffer.data, buffer.len)));
    }
}

fn into_buffer(bytes: Vec<u8>) -> EvBuffer {
    let len = bytes.len();
    let data = Box::into_raw(bytes.into_boxed_slice()).cast::<u8>();
    EvBuffer { data, len }
}

// ---- rules ----

/// Parses a rule file.
#[no_mangle]
pub unsafe extern "C" fn ev_ruleset_parse(source: *const c_char, out: *mut *mut EvRuleSet) -> EvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let rules = parse_rules(str_arg(source, "source")?).map_err(|e| fail(EvStatus::InvalidInput, e))?;
        *out = Box::into_raw(Box::new(EvRuleSet(rules)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ev_ruleset_free(rules: *mut EvRuleSet) {
    free_box(rules);
}

/// Rewrites `input` and returns the phonetic text.
#[no_mangle]
pub unsafe extern "C" fn ev_ruleset_rewrite(
    rules: *const EvRuleSet,
    input: *const c_char,
    out_text: *mut *mut c_char,
) -> EvStatus {
    guard(|| {
        let rules = handle(rules, "rules")?;
        let out = out_arg(out_text, "out_text")?;
        *out = into_c_string(rules.0.rewrite(str_arg(input, "input")?).text());
        Ok(())
    })
}

// ---- pipeline ----

/// A pipeline with the mock synthesizer. Null `rules_source` or
/// `inventory_source` selects the shipped Portuguese data.
#[no_mangle]
pub unsafe extern "C" fn ev_pipeline_new(
    rules_source: *const c_char,
    inventory_source: *const c_char,
    out: *mut *mut EvPipeline,
) -> EvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let rules = match opt_str_arg(rules_source, "rules_source")? {
            Some(s) => parse_rules(s).map_err(|e| fail(EvStatus::InvalidInput, e))?,
            None => parse_rules(PORTUGUESE_RULES).expect("shipped rules parse"),
        };
        let inventory = match opt_str_arg(inventory_source, "inventory_source")? {
            Some(s) => PhonemeInventory::parse(s).map_err(|e| fail(EvStatus::InvalidInput, e))?,
            None => PhonemeInventory::portuguese(),
        };
        let pipeline = Pipeline::new(rules, inventory, ProsodyConfig::default(), Default::default());
        *out = Box::into_raw(Box::new(EvPipeline {
            pipeline,
            abbreviations: AbbreviationTable::new(),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ev_pipeline_free(pipeline: *mut EvPipeline) {
    free_box(pipeline);
}

/// Adds or replaces an abbreviation used by later `ev_pipeline_speak` calls.
#[no_mangle]
pub unsafe extern "C" fn ev_pipeline_set_abbreviation(
    pipeline: *mut EvPipeline,
    abbreviation: *const c_char,
    expansion: *const c_char,
) -> EvStatus {
    guard(|| {
        let p = handle_mut(pipeline, "pipeline")?;
        p.abbreviations
            .set(str_arg(abbreviation, "abbreviation")?, str_arg(expansion, "expansion")?)
            .map_err(|e| fail(EvStatus::InvalidInput, e))
    })
}

/// Synthesizes `text`. Either output pointer may be null when not wanted.
/// On `PipelineFailed` the message starts with the failing stage name.
#[no_mangle]
pub unsafe extern "C" fn ev_pipeline_speak(
    pipeline: *const EvPipeline,
    text: *const c_char,
    seed: u64,
    out_pho: *mut *mut c_char,
    out_wav: *mut EvBuffer,
) -> EvStatus {
    guard(|| {
        let p = handle(pipeline, "pipeline")?;
        let utt = p
            .pipeline
            .run(str_arg(text, "text")?, &p.abbreviations, seed)
            .map_err(|e| fail(EvStatus::PipelineFailed, format!("{}: {}", e.stage.as_str(), e.message)))?;
        if let Some(out) = out_pho.as_mut() {
            *out = into_c_string(utt.pho);
        }
        if let Some(out) = out_wav.as_mut() {
            *out = into_buffer(utt.wav);
        }
        Ok(())
    })
}

// ---- prediction ----

/// The shipped Portuguese word list.
#[no_mangle]
pub extern "C" fn ev_dictionary_builtin() -> *mut EvDictionary {
    Box::into_raw(Box::new(EvDictionary(builtin_portuguese())))
}

/// Parses a word list (`word` or `word<TAB>count` per line).
#[no_mangle]
pub unsafe extern "C" fn ev_dictionary_load(source: *const c_char, out: *mut *mut EvDictionary) -> EvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let dict = load_dictionary(str_arg(source, "source")?).map_err(|e| fail(EvStatus::InvalidInput, e))?;
        *out = Box::into_raw(Box::new(EvDictionary(dict)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ev_dictionary_free(dict: *mut EvDictionary) {
    free_box(dict);
}

/// Adds a word with count zero. `out_added` (nullable) tells whether it was new.
#[no_mangle]
pub unsafe extern "C" fn ev_dictionary_add_word(
    dict: *mut EvDictionary,
    word: *const c_char,
    out_added: *mut bool,
) -> EvStatus {
    guard(|| {
        let d = handle_mut(dict, "dict")?;
        let added = d
            .0
            .add_word(str_arg(word, "word")?)
            .map_err(|e| fail(EvStatus::InvalidInput, e))?;
        if let Some(out) = out_added.as_mut() {
            *out = added;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ev_dictionary_record_use(dict: *mut EvDictionary, word: *const c_char) -> EvStatus {
    guard(|| {
        handle_mut(dict, "dict")?.0.record_use(str_arg(word, "word")?);
        Ok(())
    })
}

/// Up to `k` completions of `prefix`, one per line, most used first.
#[no_mangle]
pub unsafe extern "C" fn ev_dictionary_predict(
    dict: *const EvDictionary,
    prefix: *const c_char,
    k: usize,
    out_words: *mut *mut c_char,
) -> EvStatus {
    guard(|| {
        let d = handle(dict, "dict")?;
        let out = out_arg(out_words, "out_words")?;
        let words = d.0.predict(str_arg(prefix, "prefix")?, k);
        *out = into_c_string(words.join("\n"));
        Ok(())
    })
}

// ---- scanning ----

/// A scan session. Null `layout_source` selects the shipped alphabetic
/// layout; zero `period_ms` or `max_cycles` selects the default.
#[no_mangle]
pub unsafe extern "C" fn ev_scan_session_new(
    layout_source: *const c_char,
    period_ms: u32,
    max_cycles: u32,
    out: *mut *mut EvScanSession,
) -> EvStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let layout = match opt_str_arg(layout_source, "layout_source")? {
            Some(s) => KeyboardLayout::parse(s).map_err(|e| fail(EvStatus::InvalidInput, e))?,
            None => KeyboardLayout::default_alphabetic(),
        };
        let defaults = ScanConfig::default();
        let config = ScanConfig {
            period_ms: if period_ms == 0 { defaults.period_ms } else { period_ms },
            max_cycles: if max_cycles == 0 { defaults.max_cycles } else { max_cycles },
        };
        let state = new_session(&layout, &config).map_err(|e| fail(EvStatus::InvalidInput, e))?;
        *out = Box::into_raw(Box::new(EvScanSession { state, layout, config }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ev_scan_session_free(session: *mut EvScanSession) {
    free_box(session);
}

/// Feeds one event. `out_key` (nullable) receives the emitted key as shown
/// on the keyboard (`A`, `<space>`, ...), or null when nothing was emitted.
#[no_mangle]
pub unsafe extern "C" fn ev_scan_session_step(
    session: *mut EvScanSession,
    event: EvScanEvent,
    out_key: *mut *mut c_char,
) -> EvStatus {
    guard(|| {
        let s = handle_mut(session, "session")?;
        let event = match event {
            EvScanEvent::Tick => ScanEvent::Tick,
            EvScanEvent::Press => ScanEvent::Press,
        };
        let (next, key) = step(s.state, event, &s.layout, &s.config);
        s.state = next;
        if let Some(out) = out_key.as_mut() {
            *out = key.map_or(ptr::null_mut(), |k| into_c_string(k.to_string()));
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ev_scan_session_state(session: *const EvScanSession, out: *mut EvScanState) -> EvStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let out = out_arg(out, "out")?;
        let (mode, group) = match s.state.mode {
            ScanMode::Idle => (EvScanMode::Idle, 0),
            ScanMode::GroupScan => (EvScanMode::GroupScan, 0),
            ScanMode::ItemScan { group } => (EvScanMode::ItemScan, group),
        };
        *out = EvScanState {
            mode,
            group,
            cursor: s.state.cursor,
            cycles_done: s.state.cycles_done,
        };
        Ok(())
    })
}
