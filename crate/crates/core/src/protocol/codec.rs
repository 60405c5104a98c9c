use std::fmt;

use serde::Serialize;

use super::crc::crc16_ccitt;
use super::frame::{FrameType, TelemetryFrame, OVERHEAD, SYNC, VERSION};

/// Why a region of the byte stream was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticKind {
    /// Bytes before the first SYNC, or between frames.
    Garbage,
    BadVersion {
        version: u8,
    },
    /// Unknown TYPE, or LEN disagreeing with the TYPE's payload size.
    BadHeader {
        frame_type: u8,
        len: u8,
    },
    CrcMismatch {
        expected: u16,
        found: u16,
    },
    /// CRC passed but a field violates its range (raw counts above 4095).
    InvalidPayload,
    /// Stream ended inside a frame.
    Truncated,
}

/// A discarded region: starts at `offset` in the stream and runs up to the
/// next SYNC byte that was tried as a frame start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub offset: u64,
    pub len: u64,
    #[serde(flatten)]
    pub kind: DiagnosticKind,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} at byte {} ({} bytes)",
            self.kind, self.offset, self.len
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeEvent {
    Frame(TelemetryFrame),
    Diagnostic(Diagnostic),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decoded {
    pub frames: Vec<TelemetryFrame>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Decode a complete byte stream. Malformed regions never abort decoding.
pub fn decode(stream: &[u8]) -> Decoded {
    let mut dec = FrameDecoder::new();
    let mut events = dec.push(stream);
    events.extend(dec.finish());
    let mut out = Decoded::default();
    for ev in events {
        match ev {
            DecodeEvent::Frame(f) => out.frames.push(f),
            DecodeEvent::Diagnostic(d) => out.diagnostics.push(d),
        }
    }
    out
}

/// Incremental decoder for byte streams arriving in arbitrary chunks.
///
/// On any failure at a SYNC candidate the decoder skips that byte and hunts
/// for the next SYNC; everything skipped is folded into one diagnostic.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    /// Stream offset of `buf[0]`.
    base: u64,
    pending: Option<Diagnostic>,
}

enum Attempt {
    Frame(TelemetryFrame, usize),
    Reject(DiagnosticKind),
    NeedMore,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) -> Vec<DecodeEvent> {
        self.buf.extend_from_slice(bytes);
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < self.buf.len() {
            if self.buf[pos] != SYNC {
                let run = self.buf[pos..]
                    .iter()
                    .position(|&b| b == SYNC)
                    .unwrap_or(self.buf.len() - pos);
                self.absorb(pos, run, DiagnosticKind::Garbage);
                pos += run;
                continue;
            }
            match self.attempt(&self.buf[pos..]) {
                Attempt::Frame(frame, used) => {
                    self.flush(&mut out);
                    out.push(DecodeEvent::Frame(frame));
                    pos += used;
                }
                Attempt::Reject(kind) => {
                    self.flush(&mut out);
                    self.absorb(pos, 1, kind);
                    pos += 1;
                }
                Attempt::NeedMore => break,
            }
        }
        self.buf.drain(..pos);
        self.base += pos as u64;
        out
    }

    /// End of stream: report anything still buffered as truncated.
    pub fn finish(&mut self) -> Vec<DecodeEvent> {
        let mut out = Vec::new();
        if !self.buf.is_empty() {
            self.flush(&mut out);
            let len = self.buf.len();
            self.absorb(0, len, DiagnosticKind::Truncated);
            self.buf.clear();
            self.base += len as u64;
        }
        self.flush(&mut out);
        out
    }

    fn absorb(&mut self, pos: usize, len: usize, kind: DiagnosticKind) {
        let offset = self.base + pos as u64;
        match &mut self.pending {
            Some(d) if d.offset + d.len == offset => d.len += len as u64,
            _ => {
                self.pending = Some(Diagnostic {
                    offset,
                    len: len as u64,
                    kind,
                })
            }
        }
    }

    fn flush(&mut self, out: &mut Vec<DecodeEvent>) {
        if let Some(d) = self.pending.take() {
            out.push(DecodeEvent::Diagnostic(d));
        }
    }

    fn attempt(&self, b: &[u8]) -> Attempt {
        if b.len() < 4 {
            return Attempt::NeedMore;
        }
        if b[1] != VERSION {
            return Attempt::Reject(DiagnosticKind::BadVersion { version: b[1] });
        }
        let (type_byte, len) = (b[2], b[3]);
        let ty = match FrameType::from_byte(type_byte) {
            Some(ty) if ty.payload_len() == len => ty,
            _ => {
                return Attempt::Reject(DiagnosticKind::BadHeader {
                    frame_type: type_byte,
                    len,
                })
            }
        };
        let total = OVERHEAD + usize::from(len);
        if b.len() < total {
            return Attempt::NeedMore;
        }
        let body = &b[2..total - 2];
        let found = u16::from_le_bytes([b[total - 2], b[total - 1]]);
        let expected = crc16_ccitt(body);
        if found != expected {
            return Attempt::Reject(DiagnosticKind::CrcMismatch { expected, found });
        }
        let frame = TelemetryFrame::read_payload(ty, &body[2..]);
        if !frame.is_valid() {
            return Attempt::Reject(DiagnosticKind::InvalidPayload);
        }
        Attempt::Frame(frame, total)
    }
}
