//! PCM production and lossless local distribution.
//!
//! A [`Cable`](cable::Cable) is a user-space stand-in for a virtual audio
//! cable: one producer side, any number of consumer sides, bytes delivered
//! unchanged and in order.

pub mod cable;
pub mod framing;
pub mod synth;
pub mod wav;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cable::{Cable, CableHub, Producer, Subscription};
pub use framing::{Frame, FrameDecoder};
pub use synth::{synth_mock, ExternalSynth, MockSynth, SynthBackend};
pub use wav::{decode_wav, encode_wav};

/// 16-bit signed little-endian PCM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AudioFormat {
    pub sample_rate_hz: u32,
    pub bits_per_sample: u16,
    pub channels: u16,
}

impl AudioFormat {
    pub const CANONICAL: AudioFormat = AudioFormat {
        sample_rate_hz: 16_000,
        bits_per_sample: 16,
        channels: 1,
    };

    pub fn bytes_per_second(&self) -> usize {
        self.sample_rate_hz as usize * self.channels as usize * (self.bits_per_sample as usize / 8)
    }

    /// Samples for `duration_ms`, rounded half up.
    pub fn samples_for_ms(&self, duration_ms: u32) -> usize {
        ((u64::from(duration_ms) * u64::from(self.sample_rate_hz) + 500) / 1000) as usize
    }
}

impl Default for AudioFormat {
    fn default() -> Self {
        AudioFormat::CANONICAL
    }
}

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("synthesizer failed: {0}")]
    Synthesis(String),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed WAV: {0}")]
    Wav(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Little-endian bytes of `pcm`.
pub fn pcm_to_bytes(pcm: &[i16]) -> Vec<u8> {
    pcm.iter().flat_map(|s| s.to_le_bytes()).collect()
}

pub fn bytes_to_pcm(bytes: &[u8]) -> Vec<i16> {
    bytes
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]))
        .collect()
}
