//! Canonical RIFF/WAVE PCM container.

use std::io::Cursor;

use super::{AudioError, AudioFormat};

const HEADER_LEN: usize = 44;

/// Writes `RIFF`, a 16-byte PCM `fmt ` chunk and one `data` chunk.
pub fn encode_wav(pcm: &[i16], fmt: AudioFormat) -> Vec<u8> {
    let block_align = fmt.channels * (fmt.bits_per_sample / 8);
    let byte_rate = fmt.sample_rate_hz * u32::from(block_align);
    let data_len = (pcm.len() * 2) as u32;

    let mut out = Vec::with_capacity(HEADER_LEN + pcm.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");

    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&fmt.channels.to_le_bytes());
    out.extend_from_slice(&fmt.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&fmt.bits_per_sample.to_le_bytes());

    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in pcm {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Decodes any integer PCM WAV; callers check the format.
pub fn decode_wav(bytes: &[u8]) -> Result<(AudioFormat, Vec<i16>), AudioError> {
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|e| AudioError::Wav(e.to_string()))?;
    let spec = reader.spec();
    let fmt = AudioFormat {
        sample_rate_hz: spec.sample_rate,
        bits_per_sample: spec.bits_per_sample,
        channels: spec.channels,
    };
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(AudioError::UnsupportedFormat(format!(
            "{:?} {}-bit",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| AudioError::Wav(e.to_string()))?;
    Ok((fmt, samples))
}

/// Decodes and insists on `expected`; there is no resampling.
pub fn decode_wav_as(bytes: &[u8], expected: AudioFormat) -> Result<Vec<i16>, AudioError> {
    let (fmt, pcm) = decode_wav(bytes)?;
    if fmt != expected {
        return Err(AudioError::UnsupportedFormat(format!(
            "got {} Hz, {} channel(s), expected {} Hz, {} channel(s)",
            fmt.sample_rate_hz, fmt.channels, expected.sample_rate_hz, expected.channels
        )));
    }
    Ok(pcm)
}
