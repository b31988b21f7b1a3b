use std::ffi::{c_char, CStr, CString};
use std::ptr;

use easyvoice_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

unsafe fn take_string(p: *mut c_char) -> String {
    let s = CStr::from_ptr(p).to_str().unwrap().to_owned();
    ev_string_free(p);
    s
}

unsafe fn last_error() -> String {
    let p = ev_last_error_message();
    assert!(!p.is_null());
    CStr::from_ptr(p).to_str().unwrap().to_owned()
}

#[test]
fn ruleset_rewrite() {
    unsafe {
        let mut rules = ptr::null_mut();
        let src = c("que k@ 100 | -\nx z 60 a e o u | *\n");
        assert_eq!(ev_ruleset_parse(src.as_ptr(), &mut rules), EvStatus::Ok);
        assert!(ev_last_error_message().is_null());
        let mut out = ptr::null_mut();
        assert_eq!(ev_ruleset_rewrite(rules, c("que axo").as_ptr(), &mut out), EvStatus::Ok);
        assert_eq!(take_string(out), "k@ azo");
        ev_ruleset_free(rules);

        let mut bad = ptr::null_mut();
        assert_eq!(ev_ruleset_parse(c("que k@ lots |").as_ptr(), &mut bad), EvStatus::InvalidInput);
        assert!(bad.is_null());
        assert!(!last_error().is_empty());
    }
}

#[test]
fn null_and_bad_utf8_arguments() {
    unsafe {
        let mut rules = ptr::null_mut();
        assert_eq!(ev_ruleset_parse(ptr::null(), &mut rules), EvStatus::NullArgument);
        assert_eq!(last_error(), "source is null");
        assert_eq!(ev_ruleset_parse(c("").as_ptr(), ptr::null_mut()), EvStatus::NullArgument);
        let bytes = [0xffu8, 0xfe, 0];
        assert_eq!(ev_ruleset_parse(bytes.as_ptr().cast(), &mut rules), EvStatus::InvalidUtf8);
        let mut out = ptr::null_mut();
        assert_eq!(ev_ruleset_rewrite(ptr::null(), c("a").as_ptr(), &mut out), EvStatus::NullArgument);
        // freeing null is a no-op
        ev_ruleset_free(ptr::null_mut());
        ev_string_free(ptr::null_mut());
        ev_buffer_free(EvBuffer { data: ptr::null_mut(), len: 0 });
    }
}

#[test]
fn pipeline_speaks_deterministically() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(ev_pipeline_new(ptr::null(), ptr::null(), &mut p), EvStatus::Ok);
        let text = c("Olá, tudo bem?");
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let mut pho = ptr::null_mut();
            let mut wav = EvBuffer { data: ptr::null_mut(), len: 0 };
            assert_eq!(ev_pipeline_speak(p, text.as_ptr(), 42, &mut pho, &mut wav), EvStatus::Ok);
            let bytes = std::slice::from_raw_parts(wav.data, wav.len).to_vec();
            ev_buffer_free(wav);
            outputs.push((take_string(pho), bytes));
        }
        assert_eq!(outputs[0], outputs[1]);
        assert_eq!(&outputs[0].1[..4], b"RIFF");

        let library = easyvoice::service::Pipeline::portuguese()
            .run("Olá, tudo bem?", &Default::default(), 42)
            .unwrap();
        assert_eq!(outputs[0].0, library.pho);
        assert_eq!(outputs[0].1, library.wav);

        assert_eq!(ev_pipeline_speak(p, c("123").as_ptr(), 0, ptr::null_mut(), ptr::null_mut()), EvStatus::PipelineFailed);
        assert!(last_error().starts_with("normalize: "));
        ev_pipeline_free(p);
    }
}

#[test]
fn pipeline_abbreviations() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(ev_pipeline_new(ptr::null(), ptr::null(), &mut p), EvStatus::Ok);
        assert_eq!(ev_pipeline_set_abbreviation(p, c("qq").as_ptr(), c("qualquer").as_ptr()), EvStatus::Ok);
        let mut a = ptr::null_mut();
        let mut b = ptr::null_mut();
        ev_pipeline_speak(p, c("qq").as_ptr(), 1, &mut a, ptr::null_mut());
        ev_pipeline_speak(p, c("qualquer").as_ptr(), 1, &mut b, ptr::null_mut());
        assert_eq!(take_string(a), take_string(b));
        assert_eq!(
            ev_pipeline_set_abbreviation(p, c("two words").as_ptr(), c("x").as_ptr()),
            EvStatus::InvalidInput
        );
        ev_pipeline_free(p);
    }
}

#[test]
fn dictionary_prediction() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(ev_dictionary_load(c("quando\nqualquer\ncasa\n").as_ptr(), &mut d), EvStatus::Ok);
        let mut out = ptr::null_mut();
        assert_eq!(ev_dictionary_predict(d, c("qu").as_ptr(), 10, &mut out), EvStatus::Ok);
        assert_eq!(take_string(out), "qualquer\nquando");

        assert_eq!(ev_dictionary_record_use(d, c("quando").as_ptr()), EvStatus::Ok);
        ev_dictionary_predict(d, c("qu").as_ptr(), 1, &mut out);
        assert_eq!(take_string(out), "quando");

        let mut added = false;
        assert_eq!(ev_dictionary_add_word(d, c("Quiabo").as_ptr(), &mut added), EvStatus::Ok);
        assert!(added);
        assert_eq!(ev_dictionary_add_word(d, c("quiabo").as_ptr(), &mut added), EvStatus::Ok);
        assert!(!added);
        assert_eq!(ev_dictionary_add_word(d, c(" ").as_ptr(), ptr::null_mut()), EvStatus::InvalidInput);
        ev_dictionary_free(d);

        let builtin = ev_dictionary_builtin();
        ev_dictionary_predict(builtin, c("zz").as_ptr(), 10, &mut out);
        assert_eq!(take_string(out), "");
        ev_dictionary_free(builtin);
    }
}

#[test]
fn scan_session_reaches_c() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(ev_scan_session_new(ptr::null(), 0, 0, &mut s), EvStatus::Ok);
        let mut state = EvScanState {
            mode: EvScanMode::Idle,
            group: 9,
            cursor: 9,
            cycles_done: 9,
        };
        ev_scan_session_state(s, &mut state);
        assert_eq!(state.mode, EvScanMode::GroupScan);

        let mut key = ptr::null_mut();
        for ev in [EvScanEvent::Press, EvScanEvent::Tick, EvScanEvent::Tick] {
            assert_eq!(ev_scan_session_step(s, ev, &mut key), EvStatus::Ok);
            assert!(key.is_null());
        }
        ev_scan_session_state(s, &mut state);
        assert_eq!(
            state,
            EvScanState {
                mode: EvScanMode::ItemScan,
                group: 0,
                cursor: 2,
                cycles_done: 0
            }
        );
        ev_scan_session_step(s, EvScanEvent::Press, &mut key);
        assert_eq!(take_string(key), "C");
        ev_scan_session_free(s);

        let mut bad = ptr::null_mut();
        assert_eq!(ev_scan_session_new(ptr::null(), 50, 0, &mut bad), EvStatus::InvalidInput);
        assert_eq!(ev_scan_session_new(c("\n").as_ptr(), 0, 0, &mut bad), EvStatus::InvalidInput);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(ev_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
