//! Server-side scan sessions. Each session runs the pure scanning machine,
//! keeps the text typed so far and, inside a tokio runtime, a clock task
//! that ticks at the configured period.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard, Weak};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;
use tokio::task::JoinHandle;

use super::app::Service;
use super::error::{ErrorBody, ServiceError, Stage};
use crate::scanning::{new_session, step, Action, Key, KeyboardLayout, ScanConfig, ScanEvent, ScanState};

const UPDATE_BUFFER: usize = 64;

/// What a session looks like after an event; also the stream payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanUpdate {
    pub state: ScanState,
    /// The key chosen by this event, as shown on the keyboard.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emitted: Option<String>,
    pub text: String,
    pub predictions_visible: bool,
    /// Utterance id when the event spoke the typed text.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spoken: Option<String>,
    /// Set when speaking the typed text failed; the text is kept.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanSessionInfo {
    pub session_id: String,
    pub layout: Vec<Vec<String>>,
    pub period_ms: u32,
    #[serde(flatten)]
    pub update: ScanUpdate,
}

#[derive(Debug)]
struct SessionData {
    state: ScanState,
    layout: KeyboardLayout,
    config: ScanConfig,
    text: String,
    predictions_visible: bool,
}

impl SessionData {
    fn snapshot(&self) -> ScanUpdate {
        ScanUpdate {
            state: self.state,
            emitted: None,
            text: self.text.clone(),
            predictions_visible: self.predictions_visible,
            spoken: None,
            error: None,
        }
    }
}

#[derive(Debug)]
pub(crate) struct Session {
    data: Mutex<SessionData>,
    updates: broadcast::Sender<ScanUpdate>,
    clock: Mutex<Option<JoinHandle<()>>>,
}

impl Session {
    fn data(&self) -> MutexGuard<'_, SessionData> {
        self.data.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Some(clock) = self.clock.get_mut().unwrap_or_else(|e| e.into_inner()).take() {
            clock.abort();
        }
    }
}

#[derive(Debug, Default)]
pub(crate) struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Session>>>,
}

impl SessionStore {
    fn lock(&self) -> MutexGuard<'_, HashMap<String, Arc<Session>>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }
}

fn not_found(id: &str) -> ServiceError {
    ServiceError::not_found(Stage::Scan, format!("no scan session `{id}`"))
}

impl Service {
    fn session(&self, id: &str) -> Result<Arc<Session>, ServiceError> {
        self.sessions.lock().get(id).cloned().ok_or_else(|| not_found(id))
    }

    /// Opens a session on the current layout. Inside a tokio runtime a
    /// clock task starts ticking it.
    pub fn create_scan_session(self: &Arc<Self>) -> Result<ScanSessionInfo, ServiceError> {
        let layout = self.layout();
        let config = self.settings().scan;
        let state = new_session(&layout, &config).map_err(|e| ServiceError::invalid(Stage::Scan, e))?;
        let data = SessionData {
            state,
            layout: layout.clone(),
            config,
            text: String::new(),
            predictions_visible: true,
        };
        let update = data.snapshot();
        let session = Arc::new(Session {
            data: Mutex::new(data),
            updates: broadcast::channel(UPDATE_BUFFER).0,
            clock: Mutex::new(None),
        });
        let id = format!("{:016x}", rand::random::<u64>());
        if let Ok(rt) = tokio::runtime::Handle::try_current() {
            let task = rt.spawn(run_clock(Arc::downgrade(self), id.clone(), config.period_ms));
            *session.clock.lock().unwrap_or_else(|e| e.into_inner()) = Some(task);
        }
        self.sessions.lock().insert(id.clone(), session);
        Ok(ScanSessionInfo {
            session_id: id,
            layout: layout
                .groups()
                .iter()
                .map(|g| g.iter().map(Key::to_string).collect())
                .collect(),
            period_ms: config.period_ms,
            update,
        })
    }

    pub fn scan_state(&self, id: &str) -> Result<ScanUpdate, ServiceError> {
        Ok(self.session(id)?.data().snapshot())
    }

    /// Feeds one event to a session and interprets any emitted key.
    pub fn scan_event(&self, id: &str, event: ScanEvent) -> Result<ScanUpdate, ServiceError> {
        let session = self.session(id)?;
        let mut data = session.data();
        let (next, key) = step(data.state, event, &data.layout, &data.config);
        data.state = next;
        let mut spoken = None;
        let mut error = None;
        if let Some(key) = key {
            match key {
                Key::Letter(c) | Key::Digit(c) | Key::Punctuation(c) => data.text.push(c),
                Key::Action(Action::Space) => data.text.push(' '),
                Key::Action(Action::Backspace) => {
                    data.text.pop();
                }
                Key::Action(Action::Clear) => data.text.clear(),
                Key::Action(Action::TogglePredictions) => data.predictions_visible = !data.predictions_visible,
                Key::Action(Action::Speak) => match self.speak(&data.text) {
                    Ok(utterance) => {
                        spoken = Some(utterance);
                        data.text.clear();
                    }
                    Err(e) => error = Some(e.body()),
                },
            }
        }
        let update = ScanUpdate {
            emitted: key.map(|k| k.to_string()),
            spoken,
            error,
            ..data.snapshot()
        };
        drop(data);
        // Nobody listening is fine.
        let _ = session.updates.send(update.clone());
        Ok(update)
    }

    pub fn subscribe_scan(&self, id: &str) -> Result<(ScanUpdate, broadcast::Receiver<ScanUpdate>), ServiceError> {
        let session = self.session(id)?;
        let rx = session.updates.subscribe();
        let current = session.data().snapshot();
        Ok((current, rx))
    }

    pub fn close_scan_session(&self, id: &str) -> Result<(), ServiceError> {
        self.sessions.lock().remove(id).map(drop).ok_or_else(|| not_found(id))
    }

    pub fn scan_session_count(&self) -> usize {
        self.sessions.lock().len()
    }
}

async fn run_clock(service: Weak<Service>, id: String, period_ms: u32) {
    let period = Duration::from_millis(u64::from(period_ms));
    let mut ticker = tokio::time::interval_at(tokio::time::Instant::now() + period, period);
    ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        ticker.tick().await;
        let Some(service) = service.upgrade() else { return };
        if service.settings().scan_clock_paused {
            continue;
        }
        if service.scan_event(&id, ScanEvent::Tick).is_err() {
            return;
        }
    }
}
