//! Host-side acquisition: sessions, ingestion, annotations and export.
//!
//! Device time (`t_ms` in data frames) is the analysis timebase. The host
//! receive time is kept for display only.

mod export;
mod host;
mod journal;
mod session;

pub use export::ExportFormat;
pub use host::{CommandChannel, DaqHost, SharedSession};
pub use journal::Journal;
pub use session::{
    format_utc, Annotation, GapEvent, IngestOutcome, SampleRecord, Session, SessionConfig,
    SessionEvent, SessionId, SessionInfo, SessionState,
};

use thiserror::Error;

use crate::protocol::LinkError;

#[derive(Debug, Error)]
pub enum DaqError {
    #[error("device {0} already has a recording session")]
    Busy(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} is not recording")]
    NotRecording(String),
    #[error("session {0} is still recording; stop it before exporting")]
    StillRecording(String),
    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),
    #[error("invalid session configuration: {0}")]
    InvalidConfig(String),
    #[error("link failure: {0}")]
    Link(#[from] LinkError),
    #[error("unknown export format {0:?} (expected jsonl or csv)")]
    UnknownFormat(String),
    #[error("session file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
