use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::export::{event_line, header_line};
use super::{DaqError, Session, SessionEvent};

/// Append-only JSONL log written while recording. Each event is flushed as
/// it is appended, so a crash loses at most the line being written. The file
/// reads back with [`Session::from_jsonl`].
#[derive(Debug)]
pub struct Journal {
    out: BufWriter<File>,
}

impl Journal {
    pub fn create(path: &Path, session: &Session) -> Result<Self, DaqError> {
        let file = OpenOptions::new().create_new(true).write(true).open(path)?;
        let mut j = Self {
            out: BufWriter::new(file),
        };
        j.write_line(&header_line(session))?;
        Ok(j)
    }

    pub fn append(&mut self, event: &SessionEvent) -> Result<(), DaqError> {
        self.write_line(&event_line(event))
    }

    fn write_line(&mut self, line: &str) -> Result<(), DaqError> {
        self.out.write_all(line.as_bytes())?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}
