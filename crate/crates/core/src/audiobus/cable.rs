//! Named loopback cables with one producer and many consumers.
//!
//! Each consumer owns a queue. A consumer that falls more than the byte
//! budget behind is cut off with [`CableError::Overflow`]; the producer never
//! waits on consumers.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use crossbeam_channel::{Receiver, RecvTimeoutError, Sender};
use thiserror::Error;

use super::framing::{utterance_frames, Frame};
use super::{pcm_to_bytes, AudioFormat};

/// Ten seconds of canonical audio.
pub const DEFAULT_BUDGET_BYTES: usize = 10 * 32_000;
/// 100 ms of canonical audio per data frame.
pub const DEFAULT_CHUNK_BYTES: usize = 3_200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CableError {
    #[error("no cable named `{0}`")]
    NotFound(String),
    #[error("cable `{0}` already exists")]
    AlreadyExists(String),
    #[error("consumer fell too far behind and was disconnected")]
    Overflow,
    #[error("cable closed")]
    Closed,
    #[error("timed out waiting for a frame")]
    Timeout,
}

#[derive(Debug, Default)]
struct ConsumerState {
    queued: AtomicUsize,
    overflowed: AtomicBool,
}

#[derive(Debug)]
struct Slot {
    tx: Sender<Frame>,
    state: Arc<ConsumerState>,
}

#[derive(Debug)]
struct Inner {
    consumers: Vec<Slot>,
    open: bool,
}

#[derive(Debug)]
pub struct Cable {
    name: String,
    budget_bytes: usize,
    inner: Mutex<Inner>,
}

impl Cable {
    /// A new cable and its only producer handle.
    pub fn new(name: impl Into<String>, budget_bytes: usize) -> (Arc<Cable>, Producer) {
        let cable = Arc::new(Cable {
            name: name.into(),
            budget_bytes,
            inner: Mutex::new(Inner {
                consumers: Vec::new(),
                open: true,
            }),
        });
        let producer = Producer { cable: cable.clone() };
        (cable, producer)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn budget_bytes(&self) -> usize {
        self.budget_bytes
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn consumer_count(&self) -> usize {
        self.lock().consumers.len()
    }

    pub fn is_open(&self) -> bool {
        self.lock().open
    }

    /// Attaches a consumer; it sees frames published from now on.
    pub fn subscribe(&self) -> Result<Subscription, CableError> {
        let mut inner = self.lock();
        if !inner.open {
            return Err(CableError::Closed);
        }
        let (tx, rx) = crossbeam_channel::unbounded();
        let state = Arc::new(ConsumerState::default());
        inner.consumers.push(Slot { tx, state: state.clone() });
        Ok(Subscription { rx, state })
    }
}

/// The producer side of a cable. Dropping it closes the cable.
#[derive(Debug)]
pub struct Producer {
    cable: Arc<Cable>,
}

impl Producer {
    pub fn cable(&self) -> &Arc<Cable> {
        &self.cable
    }

    /// Delivers `frames` to every consumer as one uninterrupted block, so
    /// concurrent publishers never interleave. Returns the number of
    /// consumers still attached afterwards.
    pub fn publish(&self, frames: impl IntoIterator<Item = Frame>) -> usize {
        let budget = self.cable.budget_bytes;
        let mut inner = self.cable.lock();
        for frame in frames {
            if matches!(&frame, Frame::Data(b) if b.is_empty()) {
                continue;
            }
            let len = frame.payload_len();
            inner.consumers.retain(|slot| {
                let queued = slot.state.queued.load(Ordering::Acquire);
                if queued + len > budget {
                    slot.state.overflowed.store(true, Ordering::Release);
                    tracing::warn!(budget, "cable consumer overflowed, disconnecting");
                    return false;
                }
                slot.state.queued.fetch_add(len, Ordering::AcqRel);
                slot.tx.send(frame.clone()).is_ok()
            });
        }
        inner.consumers.len()
    }

    /// Publishes PCM as 100 ms data frames plus an end-of-utterance marker.
    pub fn publish_pcm(&self, pcm: &[i16], fmt: AudioFormat) -> usize {
        let chunk = (fmt.bytes_per_second() / 10).max(2);
        self.publish(utterance_frames(&pcm_to_bytes(pcm), chunk))
    }
}

impl Drop for Producer {
    fn drop(&mut self) {
        let mut inner = self.cable.lock();
        inner.open = false;
        inner.consumers.clear();
    }
}

/// The consumer side of a cable.
#[derive(Debug)]
pub struct Subscription {
    rx: Receiver<Frame>,
    state: Arc<ConsumerState>,
}

impl Subscription {
    fn took(&self, frame: Frame) -> Frame {
        self.state.queued.fetch_sub(frame.payload_len(), Ordering::AcqRel);
        frame
    }

    fn gone(&self) -> CableError {
        if self.state.overflowed.load(Ordering::Acquire) {
            CableError::Overflow
        } else {
            CableError::Closed
        }
    }

    /// Blocks for the next frame. Frames queued before a disconnect are
    /// still delivered first.
    pub fn recv(&self) -> Result<Frame, CableError> {
        self.rx.recv().map(|f| self.took(f)).map_err(|_| self.gone())
    }

    pub fn recv_timeout(&self, timeout: Duration) -> Result<Frame, CableError> {
        match self.rx.recv_timeout(timeout) {
            Ok(f) => Ok(self.took(f)),
            Err(RecvTimeoutError::Timeout) => Err(CableError::Timeout),
            Err(RecvTimeoutError::Disconnected) => Err(self.gone()),
        }
    }

    pub fn try_recv(&self) -> Option<Frame> {
        self.rx.try_recv().ok().map(|f| self.took(f))
    }

    /// Reads until the next end-of-utterance marker and returns the bytes.
    pub fn recv_utterance(&self) -> Result<Vec<u8>, CableError> {
        let mut out = Vec::new();
        loop {
            match self.recv()? {
                Frame::Data(b) => out.extend_from_slice(&b),
                Frame::EndOfUtterance => return Ok(out),
            }
        }
    }

    /// Bytes waiting in this consumer's queue.
    pub fn queued_bytes(&self) -> usize {
        self.state.queued.load(Ordering::Acquire)
    }
}

/// Registry of cables by name.
#[derive(Debug, Default)]
pub struct CableHub {
    cables: Mutex<HashMap<String, Arc<Cable>>>,
}

impl CableHub {
    pub fn new() -> Self {
        Self::default()
    }

    fn lock(&self) -> MutexGuard<'_, HashMap<String, Arc<Cable>>> {
        self.cables.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Creates a cable and hands back its producer. A name whose previous
    /// producer was dropped can be reused.
    pub fn create(&self, name: &str, budget_bytes: usize) -> Result<Producer, CableError> {
        let mut cables = self.lock();
        if cables.get(name).is_some_and(|c| c.is_open()) {
            return Err(CableError::AlreadyExists(name.to_owned()));
        }
        let (cable, producer) = Cable::new(name, budget_bytes);
        cables.insert(name.to_owned(), cable);
        Ok(producer)
    }

    pub fn get(&self, name: &str) -> Option<Arc<Cable>> {
        self.lock().get(name).cloned()
    }

    pub fn subscribe(&self, name: &str) -> Result<Subscription, CableError> {
        self.get(name)
            .ok_or_else(|| CableError::NotFound(name.to_owned()))?
            .subscribe()
    }

    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.lock().keys().cloned().collect();
        names.sort();
        names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_subscriber_gets_exact_bytes() {
        let (cable, producer) = Cable::new("main", DEFAULT_BUDGET_BYTES);
        let sub = cable.subscribe().unwrap();
        let payload: Vec<u8> = (0..10_000u32).map(|i| (i * 7) as u8).collect();
        producer.publish(utterance_frames(&payload, 333));
        assert_eq!(sub.recv_utterance().unwrap(), payload);
        assert_eq!(sub.queued_bytes(), 0);
    }

    #[test]
    fn fan_out_to_three() {
        let (cable, producer) = Cable::new("main", DEFAULT_BUDGET_BYTES);
        let subs: Vec<_> = (0..3).map(|_| cable.subscribe().unwrap()).collect();
        let payload = vec![42u8; 4096];
        assert_eq!(producer.publish(utterance_frames(&payload, 1000)), 3);
        for s in &subs {
            assert_eq!(s.recv_utterance().unwrap(), payload);
        }
    }

    #[test]
    fn unknown_cable() {
        let hub = CableHub::new();
        assert_eq!(hub.subscribe("nope").unwrap_err(), CableError::NotFound("nope".into()));
        let _p = hub.create("voip", DEFAULT_BUDGET_BYTES).unwrap();
        assert_eq!(hub.create("voip", 1).unwrap_err(), CableError::AlreadyExists("voip".into()));
        assert!(hub.subscribe("voip").is_ok());
    }

    #[test]
    fn slow_consumer_is_cut_off_not_the_others() {
        let (cable, producer) = Cable::new("main", 1000);
        let slow = cable.subscribe().unwrap();
        let fast = cable.subscribe().unwrap();
        for _ in 0..5 {
            producer.publish(utterance_frames(&[1u8; 400], 400));
            assert_eq!(fast.recv_utterance().unwrap(), vec![1u8; 400]);
        }
        assert_eq!(cable.consumer_count(), 1);
        // two whole utterances fit the budget before the cut
        assert_eq!(slow.recv_utterance().unwrap().len(), 400);
        assert_eq!(slow.recv_utterance().unwrap().len(), 400);
        assert_eq!(slow.recv().unwrap_err(), CableError::Overflow);
    }

    #[test]
    fn dropping_producer_closes() {
        let (cable, producer) = Cable::new("main", DEFAULT_BUDGET_BYTES);
        let sub = cable.subscribe().unwrap();
        drop(producer);
        assert_eq!(sub.recv().unwrap_err(), CableError::Closed);
        assert_eq!(cable.subscribe().unwrap_err(), CableError::Closed);
        assert_eq!(sub.recv_timeout(Duration::from_millis(1)).unwrap_err(), CableError::Closed);
    }

    #[test]
    fn dropped_subscriber_is_pruned() {
        let (cable, producer) = Cable::new("main", DEFAULT_BUDGET_BYTES);
        drop(cable.subscribe().unwrap());
        assert_eq!(producer.publish([Frame::EndOfUtterance]), 0);
    }

    #[test]
    fn pcm_frames_are_100ms() {
        let (cable, producer) = Cable::new("main", DEFAULT_BUDGET_BYTES);
        let sub = cable.subscribe().unwrap();
        producer.publish_pcm(&[7i16; 4000], AudioFormat::CANONICAL);
        assert_eq!(sub.recv().unwrap().payload_len(), 3200);
        assert_eq!(sub.recv().unwrap().payload_len(), 3200);
        assert_eq!(sub.recv().unwrap().payload_len(), 1600);
        assert_eq!(sub.recv().unwrap(), Frame::EndOfUtterance);
    }
}
