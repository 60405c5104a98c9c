use serde::{Deserialize, Serialize};

use super::crc::crc16_ccitt;

pub const SYNC: u8 = 0xA5;
pub const VERSION: u8 = 0x01;
/// SYNC, VER, TYPE, LEN and the two CRC bytes.
pub const OVERHEAD: usize = 6;
pub const MAX_COUNT: u16 = 4095;

/// Message type byte on the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum FrameType {
    Data = 0x01,
    Status = 0x02,
    CmdStart = 0x10,
    CmdStop = 0x11,
    CmdConfig = 0x12,
    Ack = 0x20,
}

impl FrameType {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => Self::Data,
            0x02 => Self::Status,
            0x10 => Self::CmdStart,
            0x11 => Self::CmdStop,
            0x12 => Self::CmdConfig,
            0x20 => Self::Ack,
            _ => return None,
        })
    }

    /// Every type has a fixed payload length.
    pub fn payload_len(self) -> u8 {
        match self {
            Self::Data => 10,
            Self::Status => 3,
            Self::CmdStart | Self::CmdStop => 0,
            Self::CmdConfig => 4,
            Self::Ack => 2,
        }
    }

    pub fn is_command(self) -> bool {
        matches!(self, Self::CmdStart | Self::CmdStop | Self::CmdConfig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFrame {
    pub seq: u16,
    pub t_ms: u32,
    pub ph_raw: u16,
    pub temp_raw: u16,
}

/// Status flag bits.
pub mod status_flags {
    /// An ADC channel hit a rail since the previous status frame.
    pub const SATURATED: u8 = 0x01;
    /// Electrode membrane hydrated.
    pub const READY: u8 = 0x02;
    /// Data frames are being emitted.
    pub const STREAMING: u8 = 0x04;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusFrame {
    pub battery_mv: u16,
    pub flags: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigFrame {
    pub sample_hz: u16,
    pub avg_n: u8,
    pub ma_window: u8,
}

pub mod ack_status {
    pub const OK: u8 = 0x00;
    pub const REJECTED: u8 = 0x01;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AckFrame {
    /// TYPE byte of the acknowledged command.
    pub cmd: u8,
    pub status: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TelemetryFrame {
    Data(DataFrame),
    Status(StatusFrame),
    CmdStart,
    CmdStop,
    CmdConfig(ConfigFrame),
    Ack(AckFrame),
}

impl TelemetryFrame {
    pub fn frame_type(&self) -> FrameType {
        match self {
            Self::Data(_) => FrameType::Data,
            Self::Status(_) => FrameType::Status,
            Self::CmdStart => FrameType::CmdStart,
            Self::CmdStop => FrameType::CmdStop,
            Self::CmdConfig(_) => FrameType::CmdConfig,
            Self::Ack(_) => FrameType::Ack,
        }
    }

    pub fn is_command(&self) -> bool {
        self.frame_type().is_command()
    }

    /// Raw counts must fit the 12-bit converter.
    pub fn is_valid(&self) -> bool {
        match self {
            Self::Data(d) => d.ph_raw <= MAX_COUNT && d.temp_raw <= MAX_COUNT,
            _ => true,
        }
    }

    fn write_payload(&self, out: &mut Vec<u8>) {
        match self {
            Self::Data(d) => {
                out.extend_from_slice(&d.seq.to_le_bytes());
                out.extend_from_slice(&d.t_ms.to_le_bytes());
                out.extend_from_slice(&d.ph_raw.to_le_bytes());
                out.extend_from_slice(&d.temp_raw.to_le_bytes());
            }
            Self::Status(s) => {
                out.extend_from_slice(&s.battery_mv.to_le_bytes());
                out.push(s.flags);
            }
            Self::CmdStart | Self::CmdStop => {}
            Self::CmdConfig(c) => {
                out.extend_from_slice(&c.sample_hz.to_le_bytes());
                out.push(c.avg_n);
                out.push(c.ma_window);
            }
            Self::Ack(a) => {
                out.push(a.cmd);
                out.push(a.status);
            }
        }
    }

    /// Parse a payload whose length already matches `ty`.
    pub(crate) fn read_payload(ty: FrameType, p: &[u8]) -> Self {
        let u16_at = |i: usize| u16::from_le_bytes([p[i], p[i + 1]]);
        match ty {
            FrameType::Data => Self::Data(DataFrame {
                seq: u16_at(0),
                t_ms: u32::from_le_bytes([p[2], p[3], p[4], p[5]]),
                ph_raw: u16_at(6),
                temp_raw: u16_at(8),
            }),
            FrameType::Status => Self::Status(StatusFrame {
                battery_mv: u16_at(0),
                flags: p[2],
            }),
            FrameType::CmdStart => Self::CmdStart,
            FrameType::CmdStop => Self::CmdStop,
            FrameType::CmdConfig => Self::CmdConfig(ConfigFrame {
                sample_hz: u16_at(0),
                avg_n: p[2],
                ma_window: p[3],
            }),
            FrameType::Ack => Self::Ack(AckFrame {
                cmd: p[0],
                status: p[1],
            }),
        }
    }
}

/// Serialise a frame:
///
/// ```text
/// SYNC 0xA5 | VER 0x01 | TYPE | LEN | payload (LEN bytes) | CRC16 lo | CRC16 hi
/// ```
///
/// Multi-byte fields are little-endian; the CRC covers TYPE through the end of
/// the payload.
pub fn encode(frame: &TelemetryFrame) -> Vec<u8> {
    let ty = frame.frame_type();
    let len = ty.payload_len();
    let mut out = Vec::with_capacity(OVERHEAD + usize::from(len));
    out.extend_from_slice(&[SYNC, VERSION, ty as u8, len]);
    frame.write_payload(&mut out);
    debug_assert_eq!(out.len(), 4 + usize::from(len));
    let crc = crc16_ccitt(&out[2..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}
