//! Binary telemetry framing and the simulated radio link.
//!
//! Frame layout (all multi-byte fields little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 1    | SYNC `0xA5`                             |
//! | 1      | 1    | VER `0x01`                              |
//! | 2      | 1    | TYPE                                    |
//! | 3      | 1    | LEN (payload bytes)                     |
//! | 4      | LEN  | payload                                 |
//! | 4+LEN  | 2    | CRC-16/CCITT over TYPE..payload         |
//!
//! | TYPE   | frame     | payload                                             |
//! |--------|-----------|-----------------------------------------------------|
//! | `0x01` | Data      | seq u16, t_ms u32, ph_raw u16, temp_raw u16         |
//! | `0x02` | Status    | battery_mv u16, flags u8                            |
//! | `0x10` | CmdStart  | none                                                |
//! | `0x11` | CmdStop   | none                                                |
//! | `0x12` | CmdConfig | sample_hz u16, avg_n u8, ma_window u8               |
//! | `0x20` | Ack       | cmd u8, status u8                                   |

mod codec;
mod crc;
mod frame;
mod link;

pub use codec::{decode, DecodeEvent, Decoded, Diagnostic, DiagnosticKind, FrameDecoder};
pub use crc::crc16_ccitt;
pub use frame::{
    ack_status, encode, status_flags, AckFrame, ConfigFrame, DataFrame, FrameType, StatusFrame,
    TelemetryFrame, MAX_COUNT, OVERHEAD, SYNC, VERSION,
};
pub use link::{link_transmit, CommandOutcome, Delivery, LinkError, LinkParams, LossyLink};
