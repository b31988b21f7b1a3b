#![cfg(feature = "service")]

use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::http::{Request, StatusCode};
use axum::Router;
use easyvoice::audiobus::{bytes_to_pcm, decode_wav, encode_wav, AudioFormat, ExternalSynth, FrameDecoder, Frame, SynthBackend};
use easyvoice::service::{http::router, Service, Settings};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn settings() -> Settings {
    Settings {
        pin_seed: Some(1),
        scan_clock_paused: true,
        ..Settings::default()
    }
}

fn app() -> (Arc<Service>, Router) {
    let svc = Service::in_memory(settings()).unwrap();
    (svc.clone(), router(svc))
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Bytes) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => req
            .header("content-type", "application/json")
            .body(Body::from(v.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes())
}

async fn send_json(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

#[tokio::test]
async fn speak_then_fetch_artifacts() {
    let (_, app) = app();
    let (status, body) = send_json(&app, "POST", "/speak", Some(json!({"text": "Olá, tudo bem?"}))).await;
    assert_eq!(status, StatusCode::OK);
    let id = body["id"].as_str().unwrap().to_owned();

    let (status, pho) = send(&app, "GET", &format!("/utterances/{id}/pho"), None).await;
    assert_eq!(status, StatusCode::OK);
    let pho = String::from_utf8(pho.to_vec()).unwrap();
    let (status, wav) = send(&app, "GET", &format!("/utterances/{id}/wav"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (fmt, pcm) = decode_wav(&wav).unwrap();
    assert_eq!(fmt, AudioFormat::CANONICAL);
    let expected: usize = easyvoice::phonemes::parse_pho(&pho)
        .unwrap()
        .iter()
        .map(|e| fmt.samples_for_ms(e.duration_ms))
        .sum();
    assert_eq!(pcm.len(), expected);

    let (status, body) = send_json(&app, "GET", "/utterances/nope/pho", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["stage"], "utterance");
}

#[tokio::test]
async fn bad_requests_name_their_stage() {
    let (_, app) = app();
    let (status, body) = send_json(&app, "POST", "/speak", Some(json!({"text": "   "}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["stage"], "request");

    let (status, body) = send_json(&app, "POST", "/speak", Some(json!({"text": "123"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["stage"], "normalize");
    assert!(body["message"].as_str().unwrap().len() > 3);

    let req = Request::post("/speak")
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::BAD_REQUEST);
    let body: Value = serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(body["stage"], "request");

    let (status, body) = send_json(&app, "POST", "/speak", Some(json!({"words": "x"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["stage"], "request");
}

#[tokio::test]
async fn synthesis_failure_is_a_server_error() {
    let svc = Service::in_memory(Settings {
        synth_backend: SynthBackend::External(ExternalSynth::new("/nonexistent/synth {pho} {wav}")),
        ..settings()
    })
    .unwrap();
    let app = router(svc.clone());
    let (status, body) = send_json(&app, "POST", "/speak", Some(json!({"text": "casa"}))).await;
    assert_eq!(status, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(body["stage"], "synthesis");
    assert!(svc.archive().0.is_empty());
}

#[tokio::test]
async fn predict_endpoint() {
    let (_, app) = app();
    let (status, body) = send_json(&app, "GET", "/predict?prefix=zz", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"words": []}));

    let (_, body) = send_json(&app, "GET", "/predict?prefix=qua&k=3", None).await;
    let words = body["words"].as_array().unwrap();
    assert_eq!(words.len(), 3);
    assert!(words.iter().all(|w| w.as_str().unwrap().starts_with("qua")));
}

#[tokio::test]
async fn spoken_words_rise_in_predictions() {
    let (_, app) = app();
    let (_, before) = send_json(&app, "GET", "/predict?prefix=quadr&k=1", None).await;
    // pick a word that is not already first
    let (_, all) = send_json(&app, "GET", "/predict?prefix=quadr&k=50", None).await;
    let last = all["words"].as_array().unwrap().last().unwrap().as_str().unwrap().to_owned();
    assert_ne!(before["words"][0], json!(last));
    for _ in 0..3 {
        send(&app, "POST", "/speak", Some(json!({"text": last}))).await;
    }
    let (_, after) = send_json(&app, "GET", "/predict?prefix=quadr&k=1", None).await;
    assert_eq!(after["words"][0], json!(last));
}

#[tokio::test]
async fn abbreviation_crud() {
    let (_, app) = app();
    let (status, _) = send_json(&app, "POST", "/abbreviations", Some(json!({"abbreviation": "qq", "expansion": "qualquer"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = send_json(&app, "POST", "/abbreviations", Some(json!({"abbreviation": "qq", "expansion": "quase"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["stage"], "abbreviations");
    let (status, _) = send_json(&app, "POST", "/abbreviations", Some(json!({"abbreviation": "a b", "expansion": "x"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, body) = send_json(&app, "GET", "/abbreviations", None).await;
    assert_eq!(body, json!({"abbreviations": [{"abbreviation": "qq", "expansion": "qualquer"}]}));

    let (_, spoken) = send_json(&app, "POST", "/speak", Some(json!({"text": "qq btw"}))).await;
    let (_, plain) = send_json(&app, "POST", "/speak", Some(json!({"text": "qualquer btw"}))).await;
    let a = send(&app, "GET", &format!("/utterances/{}/wav", spoken["id"].as_str().unwrap()), None).await.1;
    let b = send(&app, "GET", &format!("/utterances/{}/wav", plain["id"].as_str().unwrap()), None).await.1;
    assert_eq!(a, b);

    let (status, _) = send(&app, "DELETE", "/abbreviations", Some(json!({"abbreviation": "qq"}))).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = send(&app, "DELETE", "/abbreviations/qq", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (_, body) = send_json(&app, "GET", "/abbreviations", None).await;
    assert_eq!(body, json!({"abbreviations": []}));
}

#[tokio::test]
async fn archive_and_respeak() {
    let (_, app) = app();
    for text in ["um", "dois", "três", "dois"] {
        send(&app, "POST", "/speak", Some(json!({"text": text}))).await;
    }
    let (_, body) = send_json(&app, "GET", "/archive", None).await;
    assert_eq!(body["capacity"], 50);
    let texts: Vec<&str> = body["entries"].as_array().unwrap().iter().map(|e| e["text"].as_str().unwrap()).collect();
    assert_eq!(texts, ["dois", "três", "um"]);

    let oldest = body["entries"][2]["id"].as_str().unwrap().to_owned();
    let (status, res) = send_json(&app, "POST", &format!("/archive/{oldest}/respeak"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(res["id"].is_string());
    let (_, body) = send_json(&app, "GET", "/archive", None).await;
    assert_eq!(body["entries"][0]["text"], "um");
    assert_eq!(body["entries"][0]["id"], json!(oldest));

    let (status, _) = send_json(&app, "POST", "/archive/2/respeak", None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, body) = send_json(&app, "GET", "/archive", None).await;
    assert_eq!(body["entries"][0]["text"], "três");

    let (status, body) = send_json(&app, "POST", "/archive/ffffffffffffffff/respeak", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["stage"], "archive");
}

#[tokio::test]
async fn dictionary_words() {
    let (_, app) = app();
    let (status, body) = send_json(&app, "POST", "/dictionary/words", Some(json!({"word": "Zzzumbido"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body, json!({"word": "zzzumbido", "added": true}));
    let (status, body) = send_json(&app, "POST", "/dictionary/words", Some(json!({"word": "zzzumbido"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["added"], false);
    let (_, body) = send_json(&app, "GET", "/predict?prefix=zz", None).await;
    assert_eq!(body, json!({"words": ["zzzumbido"]}));
    let (status, _) = send_json(&app, "POST", "/dictionary/words", Some(json!({"word": "two words"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn settings_update_is_all_or_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("settings.toml");
    let svc = Service::open(&path, dir.path()).unwrap();
    let app = router(svc);

    let (status, original) = send_json(&app, "GET", "/settings", None).await;
    assert_eq!(status, StatusCode::OK);

    let mut bad = original.clone();
    bad["archive_capacity"] = json!(3);
    bad["rules_path"] = json!(dir.path().join("missing.rules"));
    let (status, body) = send_json(&app, "PUT", "/settings", Some(bad)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["stage"], "settings");
    assert_eq!(send_json(&app, "GET", "/settings", None).await.1, original);
    assert!(!path.exists());

    let mut unknown = original.clone();
    unknown["colour"] = json!("blue");
    let (status, _) = send_json(&app, "PUT", "/settings", Some(unknown)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    std::fs::write(dir.path().join("tiny.rules"), "a o 100 |\n").unwrap();
    let mut good = original.clone();
    good["archive_capacity"] = json!(2);
    good["rules_path"] = json!("tiny.rules");
    let (status, body) = send_json(&app, "PUT", "/settings", Some(good)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["rules_path"], json!(dir.path().join("tiny.rules")));
    assert!(path.exists());
    let reloaded = Settings::load(&path).unwrap();
    assert_eq!(reloaded.archive_capacity, 2);

    for text in ["um", "dois", "três"] {
        send(&app, "POST", "/speak", Some(json!({"text": text}))).await;
    }
    let (_, body) = send_json(&app, "GET", "/archive", None).await;
    assert_eq!(body["entries"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn edits_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("settings.toml");
    {
        let app = router(Service::open(&path, dir.path()).unwrap());
        send(&app, "POST", "/abbreviations", Some(json!({"abbreviation": "vc", "expansion": "você"}))).await;
        send(&app, "POST", "/dictionary/words", Some(json!({"word": "zzzumbido"}))).await;
    }
    let app = router(Service::open(&path, dir.path()).unwrap());
    let (_, body) = send_json(&app, "GET", "/abbreviations", None).await;
    assert_eq!(body["abbreviations"][0]["expansion"], "você");
    let (_, body) = send_json(&app, "GET", "/predict?prefix=zz", None).await;
    assert_eq!(body["words"], json!(["zzzumbido"]));
}

async fn next_sse_event(body: &mut Body) -> Value {
    let mut text = String::new();
    loop {
        let frame = body.frame().await.unwrap().unwrap();
        if let Ok(data) = frame.into_data() {
            text.push_str(std::str::from_utf8(&data).unwrap());
        }
        if let Some(end) = text.find("\n\n") {
            let event = &text[..end];
            if !event.lines().any(|l| l == "event: state") {
                text.drain(..end + 2);
                continue;
            }
            let data = event.lines().find_map(|l| l.strip_prefix("data: ")).unwrap();
            return serde_json::from_str(data).unwrap();
        }
    }
}

#[tokio::test]
async fn scan_session_types_and_streams() {
    let (svc, app) = app();
    let (status, info) = send_json(&app, "POST", "/scan/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = info["session_id"].as_str().unwrap().to_owned();
    assert_eq!(info["layout"][0][0], "A");
    assert_eq!(info["state"]["mode"], "group_scan");

    let res = app
        .clone()
        .oneshot(Request::get(format!("/scan/sessions/{id}/stream")).body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let mut stream = res.into_body();
    assert_eq!(next_sse_event(&mut stream).await["state"]["mode"], "group_scan");

    // press to open A-I, tick once to B, press
    let uri = format!("/scan/sessions/{id}/events");
    for event in ["press", "tick", "press"] {
        let (status, _) = send_json(&app, "POST", &uri, Some(json!({"event": event}))).await;
        assert_eq!(status, StatusCode::OK);
    }
    assert_eq!(next_sse_event(&mut stream).await["state"]["mode"], "item_scan");
    assert_eq!(next_sse_event(&mut stream).await["state"]["cursor"], 1);
    let last = next_sse_event(&mut stream).await;
    assert_eq!(last["emitted"], "B");
    assert_eq!(last["text"], "B");

    let (_, state) = send_json(&app, "GET", &format!("/scan/sessions/{id}"), None).await;
    assert_eq!(state["text"], "B");

    let (status, _) = send_json(&app, "POST", &uri, Some(json!({"event": "wiggle"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (status, _) = send(&app, "DELETE", &format!("/scan/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    assert_eq!(svc.scan_session_count(), 0);
    let (status, _) = send(&app, "GET", &format!("/scan/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn cable_stream_carries_published_audio() {
    let (_, app) = app();
    let (_, body) = send_json(&app, "GET", "/cables", None).await;
    assert_eq!(body, json!({"cables": ["easyvoice"]}));

    let res = app
        .clone()
        .oneshot(Request::get("/cables/easyvoice/stream").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let mut stream = res.into_body();

    let pcm: Vec<i16> = (0..8000).map(|i| ((i * 37) % 2000 - 1000) as i16).collect();
    let wav = encode_wav(&pcm, AudioFormat::CANONICAL);
    let req = Request::post("/cables/easyvoice/publish").body(Body::from(wav)).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    let body: Value = serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(body["consumers"], 1);

    let mut decoder = FrameDecoder::new();
    let mut payload = Vec::new();
    'outer: loop {
        let frame = stream.frame().await.unwrap().unwrap();
        decoder.push(&frame.into_data().unwrap());
        while let Some(f) = decoder.next_frame().unwrap() {
            match f {
                Frame::Data(b) => payload.extend_from_slice(&b),
                Frame::EndOfUtterance => break 'outer,
            }
        }
    }
    assert_eq!(bytes_to_pcm(&payload), pcm);

    let (status, body) = send_json(&app, "GET", "/cables/nowhere/stream", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["stage"], "publish");
    let req = Request::post("/cables/easyvoice/publish").body(Body::from("not a wav")).unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn speaking_publishes_on_the_configured_cable() {
    let (svc, app) = app();
    let sub = svc.subscribe("easyvoice").unwrap();
    let (_, body) = send_json(&app, "POST", "/speak", Some(json!({"text": "bom dia"}))).await;
    let wav = send(&app, "GET", &format!("/utterances/{}/wav", body["id"].as_str().unwrap()), None).await.1;
    let (_, pcm) = decode_wav(&wav).unwrap();
    assert_eq!(bytes_to_pcm(&sub.recv_utterance().unwrap()), pcm);
}

#[tokio::test]
async fn ui_directory_is_served() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>teclado</h1>").unwrap();
    let svc = Service::in_memory(Settings {
        ui_dir: Some(dir.path().to_owned()),
        ..settings()
    })
    .unwrap();
    let app = router(svc);
    let (status, body) = send(&app, "GET", "/ui/index.html", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&body[..], b"<h1>teclado</h1>");
    let (status, _) = send(&app, "GET", "/ui/missing.js", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
