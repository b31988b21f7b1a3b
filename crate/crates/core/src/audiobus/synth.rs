//! Synthesizer backends turning phoneme events into PCM.

use std::f64::consts::TAU;
use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::wav::decode_wav_as;
use super::{AudioError, AudioFormat};
use crate::phonemes::{PhonemeEvent, SILENCE};

/// Deterministic stand-in synthesizer: a sine per voiced event, zeros for
/// silence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockSynth {
    /// Used for events without a pitch point.
    pub base_f0_hz: f64,
    pub level_dbfs: f64,
}

impl Default for MockSynth {
    fn default() -> Self {
        MockSynth {
            base_f0_hz: 120.0,
            level_dbfs: -12.0,
        }
    }
}

impl MockSynth {
    pub fn amplitude(&self) -> f64 {
        f64::from(i16::MAX) * 10f64.powf(self.level_dbfs / 20.0)
    }

    pub fn render(&self, events: &[PhonemeEvent], fmt: AudioFormat) -> Vec<i16> {
        let rate = f64::from(fmt.sample_rate_hz);
        let amp = self.amplitude();
        let mut pcm = Vec::with_capacity(events.iter().map(|e| fmt.samples_for_ms(e.duration_ms)).sum());
        for ev in events {
            let n = fmt.samples_for_ms(ev.duration_ms);
            if ev.symbol == SILENCE {
                pcm.resize(pcm.len() + n, 0);
                continue;
            }
            let f0 = ev.pitch_points.first().map_or(self.base_f0_hz, |p| p.f0_hz);
            let step = TAU * f0 / rate;
            pcm.extend((0..n).map(|i| (amp * (step * i as f64).sin()).round() as i16));
        }
        pcm
    }
}

/// [`MockSynth`] with default settings.
pub fn synth_mock(events: &[PhonemeEvent], fmt: AudioFormat) -> Vec<i16> {
    MockSynth::default().render(events, fmt)
}

/// Runs an external program. The command template is split like a shell
/// command line; `{pho}` and `{wav}` are replaced with temporary file paths.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalSynth {
    pub command: String,
}

impl ExternalSynth {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalSynth { command: command.into() }
    }

    pub fn synthesize(&self, pho: &str, fmt: AudioFormat) -> Result<Vec<i16>, AudioError> {
        let dir = tempfile::tempdir()?;
        let pho_path = dir.path().join("input.pho");
        let wav_path = dir.path().join("output.wav");
        std::fs::write(&pho_path, pho)?;

        let argv = self.argv(&pho_path, &wav_path)?;
        let output = Command::new(&argv[0])
            .args(&argv[1..])
            .output()
            .map_err(|e| AudioError::Synthesis(format!("cannot run `{}`: {e}", argv[0])))?;
        if !output.status.success() {
            return Err(AudioError::Synthesis(format!(
                "`{}` exited with {}: {}",
                argv[0],
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let bytes = std::fs::read(&wav_path)
            .map_err(|e| AudioError::Synthesis(format!("no WAV output at {}: {e}", wav_path.display())))?;
        decode_wav_as(&bytes, fmt)
    }

    fn argv(&self, pho: &Path, wav: &Path) -> Result<Vec<String>, AudioError> {
        let parts = shlex::split(&self.command)
            .filter(|p| !p.is_empty())
            .ok_or_else(|| AudioError::Synthesis(format!("cannot parse command `{}`", self.command)))?;
        let (pho, wav) = (pho.to_string_lossy(), wav.to_string_lossy());
        Ok(parts
            .into_iter()
            .map(|p| p.replace("{pho}", &pho).replace("{wav}", &wav))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SynthBackend {
    Mock(MockSynth),
    External(ExternalSynth),
}

impl Default for SynthBackend {
    fn default() -> Self {
        SynthBackend::Mock(MockSynth::default())
    }
}

impl SynthBackend {
    pub fn synthesize(&self, events: &[PhonemeEvent], pho: &str, fmt: AudioFormat) -> Result<Vec<i16>, AudioError> {
        match self {
            SynthBackend::Mock(m) => Ok(m.render(events, fmt)),
            SynthBackend::External(x) => x.synthesize(pho, fmt),
        }
    }
}
