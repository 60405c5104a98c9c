use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::session::{format_utc, SessionConfig, SessionEvent, SessionInfo};
use super::{DaqError, Session};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Jsonl,
    Csv,
}

impl FromStr for ExportFormat {
    type Err = DaqError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            other => Err(DaqError::UnknownFormat(other.to_owned())),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename = "header")]
pub(crate) struct Header {
    pub version: u32,
    pub session: SessionInfo,
    pub config: SessionConfig,
}

pub(crate) fn header_line(session: &Session) -> String {
    let header = Header {
        version: FORMAT_VERSION,
        session: session.info.clone(),
        config: session.config.clone(),
    };
    serde_json::to_string(&header).expect("header serialises")
}

pub(crate) fn event_line(event: &SessionEvent) -> String {
    serde_json::to_string(event).expect("event serialises")
}

impl Session {
    /// Header line, then every event in device-time order. Byte-stable.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = header_line(self);
        out.push('\n');
        for e in self.events_in_time_order() {
            out.push_str(&event_line(e));
            out.push('\n');
        }
        out.into_bytes()
    }

    /// Samples only.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut out = String::from("seq,t_ms,recv_utc,ph_raw,temp_raw,ph_mv,temp_c\n");
        for e in self.events_in_time_order() {
            if let SessionEvent::Sample(s) = e {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    s.seq,
                    s.t_ms,
                    format_utc(&s.recv_utc),
                    s.ph_raw,
                    s.temp_raw,
                    s.ph_mv,
                    s.temp_c
                );
            }
        }
        out.into_bytes()
    }

    pub fn export(&self, format: ExportFormat) -> Vec<u8> {
        match format {
            ExportFormat::Jsonl => self.to_jsonl(),
            ExportFormat::Csv => self.to_csv(),
        }
    }

    /// Parse a JSONL session file (an export or a recording journal).
    pub fn from_jsonl(bytes: &[u8]) -> Result<Session, DaqError> {
        let text = std::str::from_utf8(bytes).map_err(|e| DaqError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(DaqError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let header: Header = serde_json::from_str(first).map_err(|e| DaqError::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        if header.version != FORMAT_VERSION {
            return Err(DaqError::Parse {
                line: 1,
                message: format!("unsupported version {}", header.version),
            });
        }
        let events = lines
            .map(|(i, l)| {
                serde_json::from_str::<SessionEvent>(l).map_err(|e| DaqError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Session::restore(header.session, header.config, events))
    }
}
