//! Cable wire framing: a 4-byte little-endian length, then the payload.
//! Length 0 marks the end of an utterance.

use std::io::{self, Read, Write};

/// Largest payload a decoder accepts.
pub const MAX_FRAME_LEN: usize = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    /// Non-empty PCM bytes.
    Data(Vec<u8>),
    EndOfUtterance,
}

impl Frame {
    pub fn payload_len(&self) -> usize {
        match self {
            Frame::Data(b) => b.len(),
            Frame::EndOfUtterance => 0,
        }
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Frame::Data(b) => {
                out.extend_from_slice(&(b.len() as u32).to_le_bytes());
                out.extend_from_slice(b);
            }
            Frame::EndOfUtterance => out.extend_from_slice(&0u32.to_le_bytes()),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + self.payload_len());
        self.encode_into(&mut out);
        out
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        match self {
            Frame::Data(b) => {
                w.write_all(&(b.len() as u32).to_le_bytes())?;
                w.write_all(b)
            }
            Frame::EndOfUtterance => w.write_all(&0u32.to_le_bytes()),
        }
    }

    /// Reads one frame; `Ok(None)` on a clean end of stream.
    pub fn read_from<R: Read>(r: &mut R) -> io::Result<Option<Frame>> {
        let mut len = [0u8; 4];
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e),
        }
        let len = u32::from_le_bytes(len) as usize;
        if len == 0 {
            return Ok(Some(Frame::EndOfUtterance));
        }
        if len > MAX_FRAME_LEN {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "frame too large"));
        }
        let mut buf = vec![0; len];
        r.read_exact(&mut buf)?;
        Ok(Some(Frame::Data(buf)))
    }
}

/// Splits PCM bytes into data frames of at most `chunk` bytes followed by an
/// end-of-utterance marker.
pub fn utterance_frames(bytes: &[u8], chunk: usize) -> Vec<Frame> {
    bytes
        .chunks(chunk.max(1))
        .map(|c| Frame::Data(c.to_vec()))
        .chain(std::iter::once(Frame::EndOfUtterance))
        .collect()
}

/// Incremental decoder for a byte stream arriving in arbitrary pieces.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    pub fn next_frame(&mut self) -> io::Result<Option<Frame>> {
        if self.buf.len() < 4 {
            return Ok(None);
        }
        let len = u32::from_le_bytes(self.buf[..4].try_into().expect("4 bytes")) as usize;
        if len > MAX_FRAME_LEN {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "frame too large"));
        }
        if self.buf.len() < 4 + len {
            return Ok(None);
        }
        let frame = if len == 0 {
            Frame::EndOfUtterance
        } else {
            Frame::Data(self.buf[4..4 + len].to_vec())
        };
        self.buf.drain(..4 + len);
        Ok(Some(frame))
    }

    /// Bytes received but not yet forming a whole frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }
}
