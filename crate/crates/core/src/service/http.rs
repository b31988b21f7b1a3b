//! JSON-over-HTTP front end for [`Service`], bound to loopback.

use std::convert::Infallible;
use std::net::{Ipv4Addr, SocketAddr};
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::Router;
use futures::Stream;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;
use tower_http::services::ServeDir;

use super::error::{ErrorKind, ServiceError, Stage};
use super::{Service, Settings};
use crate::audiobus::cable::CableError;
use crate::audiobus::wav::decode_wav_as;
use crate::predict::DEFAULT_K;
use crate::scanning::ScanEvent;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self.kind {
            ErrorKind::Invalid => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Conflict => StatusCode::CONFLICT,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, axum::Json(self.body())).into_response()
    }
}

/// `axum::Json` with rejections reported in the service's error shape.
struct Json<T>(T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Json<T> {
    type Rejection = ServiceError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ServiceError> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Json(v)),
            Err(e) => Err(ServiceError::invalid(Stage::Request, e.body_text())),
        }
    }
}

type AppState = Arc<Service>;
type ApiResult<T> = Result<T, ServiceError>;

pub fn router(service: Arc<Service>) -> Router {
    let mut app = Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/speak", post(speak))
        .route("/utterances/{id}/pho", get(utterance_pho))
        .route("/utterances/{id}/wav", get(utterance_wav))
        .route("/predict", get(predict))
        .route(
            "/abbreviations",
            get(list_abbreviations).post(add_abbreviation).delete(delete_abbreviation_body),
        )
        .route("/abbreviations/{key}", delete(delete_abbreviation))
        .route("/archive", get(archive))
        .route("/archive/{id}/respeak", post(respeak))
        .route("/dictionary/words", post(add_word))
        .route("/settings", get(get_settings).put(put_settings))
        .route("/scan/sessions", post(create_session))
        .route("/scan/sessions/{id}", get(session_state).delete(close_session))
        .route("/scan/sessions/{id}/events", post(session_event))
        .route("/scan/sessions/{id}/stream", get(session_stream))
        .route("/cables", get(cables))
        .route("/cables/{name}/publish", post(publish))
        .route("/cables/{name}/stream", get(cable_stream));
    if let Some(dir) = service.ui_dir() {
        app = app.nest_service("/ui", ServeDir::new(dir).append_index_html_on_directories(true));
    }
    app.with_state(service)
}

/// Serves on 127.0.0.1:`port` until the process is interrupted.
pub async fn serve(service: Arc<Service>, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Runs a blocking service call off the async workers.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::internal(Stage::Request, e))?
}

#[derive(Deserialize)]
struct SpeakRequest {
    text: String,
}

#[derive(Serialize)]
struct IdResponse {
    id: String,
}

async fn speak(State(svc): State<AppState>, Json(req): Json<SpeakRequest>) -> ApiResult<axum::Json<IdResponse>> {
    let id = blocking(move || svc.speak(&req.text)).await?;
    Ok(axum::Json(IdResponse { id }))
}

async fn utterance_pho(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let utt = svc.utterance(&id)?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], utt.pho.clone()).into_response())
}

async fn utterance_wav(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let utt = svc.utterance(&id)?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], utt.wav.clone()).into_response())
}

#[derive(Deserialize)]
struct PredictQuery {
    #[serde(default)]
    prefix: String,
    k: Option<usize>,
}

#[derive(Serialize)]
struct WordsResponse {
    words: Vec<String>,
}

async fn predict(State(svc): State<AppState>, Query(q): Query<PredictQuery>) -> axum::Json<WordsResponse> {
    axum::Json(WordsResponse {
        words: svc.predict(&q.prefix, q.k.unwrap_or(DEFAULT_K)),
    })
}

#[derive(Serialize, Deserialize)]
struct Abbreviation {
    abbreviation: String,
    expansion: String,
}

#[derive(Serialize)]
struct AbbreviationList {
    abbreviations: Vec<Abbreviation>,
}

#[derive(Deserialize)]
struct AbbreviationKey {
    abbreviation: String,
}

async fn list_abbreviations(State(svc): State<AppState>) -> axum::Json<AbbreviationList> {
    axum::Json(AbbreviationList {
        abbreviations: svc
            .abbreviations()
            .into_iter()
            .map(|(abbreviation, expansion)| Abbreviation {
                abbreviation,
                expansion,
            })
            .collect(),
    })
}

async fn add_abbreviation(State(svc): State<AppState>, Json(req): Json<Abbreviation>) -> ApiResult<Response> {
    svc.add_abbreviation(&req.abbreviation, &req.expansion)?;
    Ok((StatusCode::CREATED, axum::Json(req)).into_response())
}

async fn delete_abbreviation(State(svc): State<AppState>, Path(key): Path<String>) -> ApiResult<StatusCode> {
    svc.remove_abbreviation(&key)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn delete_abbreviation_body(
    State(svc): State<AppState>,
    Json(req): Json<AbbreviationKey>,
) -> ApiResult<StatusCode> {
    svc.remove_abbreviation(&req.abbreviation)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Serialize)]
struct ArchiveResponse {
    entries: Vec<super::ArchiveEntry>,
    capacity: usize,
}

async fn archive(State(svc): State<AppState>) -> axum::Json<ArchiveResponse> {
    let (entries, capacity) = svc.archive();
    axum::Json(ArchiveResponse { entries, capacity })
}

async fn respeak(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<axum::Json<IdResponse>> {
    let id = blocking(move || svc.respeak(&id)).await?;
    Ok(axum::Json(IdResponse { id }))
}

#[derive(Deserialize)]
struct WordRequest {
    word: String,
}

#[derive(Serialize)]
struct WordResponse {
    word: String,
    added: bool,
}

async fn add_word(State(svc): State<AppState>, Json(req): Json<WordRequest>) -> ApiResult<Response> {
    let added = svc.add_word(&req.word)?;
    let status = if added { StatusCode::CREATED } else { StatusCode::OK };
    Ok((
        status,
        axum::Json(WordResponse {
            word: req.word.trim().to_lowercase(),
            added,
        }),
    )
        .into_response())
}

async fn get_settings(State(svc): State<AppState>) -> axum::Json<Settings> {
    axum::Json(svc.settings())
}

async fn put_settings(State(svc): State<AppState>, Json(settings): Json<Settings>) -> ApiResult<axum::Json<Settings>> {
    Ok(axum::Json(blocking(move || svc.update_settings(settings)).await?))
}

async fn create_session(State(svc): State<AppState>) -> ApiResult<Response> {
    let info = svc.create_scan_session()?;
    Ok((StatusCode::CREATED, axum::Json(info)).into_response())
}

async fn session_state(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<axum::Json<super::ScanUpdate>> {
    Ok(axum::Json(svc.scan_state(&id)?))
}

async fn close_session(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    svc.close_scan_session(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct EventRequest {
    event: ScanEvent,
}

async fn session_event(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<EventRequest>,
) -> ApiResult<axum::Json<super::ScanUpdate>> {
    Ok(axum::Json(blocking(move || svc.scan_event(&id, req.event)).await?))
}

/// Server-sent `state` events: the current state first, then every change.
async fn session_stream(
    State(svc): State<AppState>,
    Path(id): Path<String>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let (first, rx) = svc.subscribe_scan(&id)?;
    let first = Event::default().event("state").json_data(&first).expect("serializable");
    let rest = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(update) => {
                    let event = Event::default().event("state").json_data(&update).expect("serializable");
                    return Some((Ok(event), rx));
                }
                Err(RecvError::Lagged(_)) => continue,
                Err(RecvError::Closed) => return None,
            }
        }
    });
    let stream = futures::StreamExt::chain(futures::stream::once(async { Ok(first) }), rest);
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

#[derive(Serialize)]
struct CablesResponse {
    cables: Vec<String>,
}

async fn cables(State(svc): State<AppState>) -> axum::Json<CablesResponse> {
    axum::Json(CablesResponse {
        cables: svc.cable_names(),
    })
}

#[derive(Serialize)]
struct PublishResponse {
    consumers: usize,
}

/// Accepts a canonical-format WAV and publishes it as one utterance.
async fn publish(
    State(svc): State<AppState>,
    Path(name): Path<String>,
    body: Bytes,
) -> ApiResult<axum::Json<PublishResponse>> {
    let fmt = crate::audiobus::AudioFormat::CANONICAL;
    let pcm = decode_wav_as(&body, fmt).map_err(|e| ServiceError::invalid(Stage::Publish, e))?;
    let consumers = blocking(move || svc.publish_pcm(&name, &pcm)).await?;
    Ok(axum::Json(PublishResponse { consumers }))
}

/// Streams the cable's wire format: length-prefixed frames, length 0 ending
/// each utterance. The stream ends if this consumer overflows.
async fn cable_stream(State(svc): State<AppState>, Path(name): Path<String>) -> ApiResult<Response> {
    let sub = svc.subscribe(&name)?;
    let (tx, rx) = tokio::sync::mpsc::channel::<Result<Bytes, std::io::Error>>(16);
    std::thread::spawn(move || loop {
        match sub.recv() {
            Ok(frame) => {
                if tx.blocking_send(Ok(Bytes::from(frame.encode()))).is_err() {
                    return;
                }
            }
            Err(CableError::Overflow) => {
                tracing::warn!(cable = %name, "stream consumer overflowed");
                return;
            }
            Err(_) => return,
        }
    });
    let body = Body::from_stream(futures::stream::unfold(rx, |mut rx| async move {
        rx.recv().await.map(|item| (item, rx))
    }));
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], body).into_response())
}
