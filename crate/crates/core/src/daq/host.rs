use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};

use super::{
    Annotation, DaqError, ExportFormat, IngestOutcome, Journal, Session, SessionConfig, SessionId,
    SessionInfo,
};
use crate::protocol::{CommandOutcome, DataFrame, LinkError, TelemetryFrame};

/// Acknowledged command path to one device.
pub trait CommandChannel {
    fn command(&mut self, cmd: &TelemetryFrame) -> Result<CommandOutcome, LinkError>;
}

pub type SharedSession = Arc<RwLock<Session>>;

/// Session store shared between the ingestion path and any number of
/// readers.
///
/// Each session sits behind its own lock: ingestion is the single writer,
/// and readers (export, live streams) see a consistent prefix of the log.
#[derive(Debug, Default)]
pub struct DaqHost {
    inner: RwLock<Inner>,
    journal_dir: Option<PathBuf>,
}

#[derive(Debug, Default)]
struct Inner {
    sessions: BTreeMap<SessionId, SharedSession>,
    /// Device → recording session; `None` while the start handshake runs.
    active: HashMap<String, Option<SessionId>>,
    journals: HashMap<SessionId, Arc<Mutex<Journal>>>,
    next_id: u64,
}

impl DaqHost {
    pub fn new() -> Self {
        Self::default()
    }

    /// Journal every recording session to `<dir>/<id>.journal.jsonl`.
    pub fn with_journal_dir(dir: impl Into<PathBuf>) -> Self {
        Self {
            journal_dir: Some(dir.into()),
            ..Self::default()
        }
    }

    /// Configure the device, start streaming and open a recording session.
    pub fn start_session(
        &self,
        device: &str,
        device_info: &str,
        config: SessionConfig,
        start_utc: DateTime<Utc>,
        channel: &mut dyn CommandChannel,
    ) -> Result<SessionId, DaqError> {
        config.validate()?;
        {
            let mut inner = self.inner.write().unwrap();
            if inner.active.contains_key(device) {
                return Err(DaqError::Busy(device.to_owned()));
            }
            inner.active.insert(device.to_owned(), None);
        }
        let handshake = channel
            .command(&TelemetryFrame::CmdConfig(config.firmware.to_frame()))
            .and_then(|_| channel.command(&TelemetryFrame::CmdStart));
        let mut inner = self.inner.write().unwrap();
        if let Err(e) = handshake {
            inner.active.remove(device);
            return Err(e.into());
        }
        inner.next_id += 1;
        let id = format!("session-{:04}", inner.next_id);
        let session = Session::new(id.clone(), start_utc, config, device, device_info);
        if let Some(dir) = &self.journal_dir {
            let path = dir.join(format!("{id}.journal.jsonl"));
            match Journal::create(&path, &session) {
                Ok(j) => {
                    inner.journals.insert(id.clone(), Arc::new(Mutex::new(j)));
                }
                Err(e) => {
                    inner.active.remove(device);
                    return Err(e);
                }
            }
        }
        inner
            .sessions
            .insert(id.clone(), Arc::new(RwLock::new(session)));
        inner.active.insert(device.to_owned(), Some(id.clone()));
        Ok(id)
    }

    /// Stop streaming and close the session. If the stop command is not
    /// acknowledged the device may still be streaming, so the session stays
    /// open.
    pub fn stop_session(&self, id: &str, channel: &mut dyn CommandChannel) -> Result<(), DaqError> {
        let shared = self.session(id)?;
        if !shared.read().unwrap().is_recording() {
            return Err(DaqError::NotRecording(id.to_owned()));
        }
        channel.command(&TelemetryFrame::CmdStop)?;
        self.mark_stopped(id)
    }

    /// Close a session without talking to the device (device gone).
    pub fn mark_stopped(&self, id: &str) -> Result<(), DaqError> {
        let shared = self.session(id)?;
        let device = {
            let mut s = shared.write().unwrap();
            s.stop();
            s.info.device.clone()
        };
        let mut inner = self.inner.write().unwrap();
        if inner.active.get(&device) == Some(&Some(id.to_owned())) {
            inner.active.remove(&device);
        }
        inner.journals.remove(id);
        Ok(())
    }

    pub fn ingest_frame(
        &self,
        id: &str,
        frame: &DataFrame,
        recv_utc: DateTime<Utc>,
    ) -> Result<IngestOutcome, DaqError> {
        let shared = self.session(id)?;
        let mut s = shared.write().unwrap();
        let before = s.events().len();
        let outcome = s.ingest_frame(frame, recv_utc)?;
        self.journal(id, &s, before)?;
        Ok(outcome)
    }

    pub fn add_annotation(&self, id: &str, a: Annotation) -> Result<Annotation, DaqError> {
        let shared = self.session(id)?;
        let mut s = shared.write().unwrap();
        let before = s.events().len();
        let stored = s.add_annotation(a)?;
        self.journal(id, &s, before)?;
        Ok(stored)
    }

    fn journal(&self, id: &str, s: &Session, from: usize) -> Result<(), DaqError> {
        let journal = self.inner.read().unwrap().journals.get(id).cloned();
        if let Some(j) = journal {
            let mut j = j.lock().unwrap();
            for e in &s.events()[from..] {
                j.append(e)?;
            }
        }
        Ok(())
    }

    /// Export a stopped session.
    pub fn export_session(&self, id: &str, format: ExportFormat) -> Result<Vec<u8>, DaqError> {
        let shared = self.session(id)?;
        let s = shared.read().unwrap();
        if s.is_recording() {
            return Err(DaqError::StillRecording(id.to_owned()));
        }
        Ok(s.export(format))
    }

    pub fn session(&self, id: &str) -> Result<SharedSession, DaqError> {
        self.inner
            .read()
            .unwrap()
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| DaqError::UnknownSession(id.to_owned()))
    }

    pub fn list(&self) -> Vec<SessionInfo> {
        self.inner
            .read()
            .unwrap()
            .sessions
            .values()
            .map(|s| s.read().unwrap().info.clone())
            .collect()
    }

    /// Recording session on `device`, if any.
    pub fn active_session(&self, device: &str) -> Option<SessionId> {
        self.inner
            .read()
            .unwrap()
            .active
            .get(device)
            .cloned()
            .flatten()
    }
}
