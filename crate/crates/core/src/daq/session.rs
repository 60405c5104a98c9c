use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::DaqError;
use crate::device::{adc_to_mv, temp_from_mv, AfeParams, TempSensorParams};
use crate::firmware::FirmwareConfig;
use crate::protocol::DataFrame;

pub type SessionId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Recording,
    Stopped,
}

/// Everything needed to turn raw counts back into physical units.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub firmware: FirmwareConfig,
    pub afe: AfeParams,
    pub temp_sensor: TempSensorParams,
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), DaqError> {
        let err = |e: String| DaqError::InvalidConfig(e);
        self.firmware.validate().map_err(|e| err(e.to_string()))?;
        self.afe.validate().map_err(|e| err(e.to_string()))?;
        if self.temp_sensor.k_mv_per_c == 0.0 {
            return Err(err("temperature sensor slope must be non-zero".into()));
        }
        Ok(())
    }

    pub fn ph_mv(&self, counts: u16) -> f64 {
        adc_to_mv(counts, &self.afe)
    }

    pub fn temp_c(&self, counts: u16) -> f64 {
        let mv = adc_to_mv(counts, &self.afe.temperature_path());
        temp_from_mv(mv, &self.temp_sensor).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: SessionId,
    #[serde(with = "utc_millis")]
    pub start_utc: DateTime<Utc>,
    pub device: String,
    pub device_info: String,
    pub state: SessionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub seq: u16,
    pub t_ms: u32,
    #[serde(with = "utc_millis")]
    pub recv_utc: DateTime<Utc>,
    pub ph_raw: u16,
    pub temp_raw: u16,
    pub ph_mv: f64,
    pub temp_c: f64,
}

/// Operator-marked span of device time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Annotation {
    pub label: String,
    pub t_start_ms: u32,
    pub t_end_ms: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_ph: Option<f64>,
}

impl Annotation {
    pub fn new(label: impl Into<String>, t_start_ms: u32, t_end_ms: u32) -> Self {
        Self {
            label: label.into(),
            t_start_ms,
            t_end_ms,
            expected_ph: None,
        }
    }

    pub fn with_ph(mut self, ph: f64) -> Self {
        self.expected_ph = Some(ph);
        self
    }

    pub fn validate(&self) -> Result<(), DaqError> {
        if self.label.trim().is_empty() {
            return Err(DaqError::InvalidAnnotation("label is empty".into()));
        }
        if self.t_start_ms >= self.t_end_ms {
            return Err(DaqError::InvalidAnnotation(format!(
                "span [{}, {}) ms is empty",
                self.t_start_ms, self.t_end_ms
            )));
        }
        if let Some(ph) = self.expected_ph {
            if !(0.0..=14.0).contains(&ph) {
                return Err(DaqError::InvalidAnnotation(format!(
                    "expected pH {ph} outside [0, 14]"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, t_ms: u32) -> bool {
        (self.t_start_ms..self.t_end_ms).contains(&t_ms)
    }
}

/// Frames lost between `after_seq` and the frame stamped `t_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapEvent {
    pub t_ms: u32,
    pub after_seq: u16,
    pub missing: u16,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Sample(SampleRecord),
    Annotation(Annotation),
    Gap(GapEvent),
}

impl SessionEvent {
    /// Device time used to order the export.
    pub fn t_ms(&self) -> u32 {
        match self {
            Self::Sample(s) => s.t_ms,
            Self::Annotation(a) => a.t_start_ms,
            Self::Gap(g) => g.t_ms,
        }
    }

    pub(crate) fn rank(&self) -> u8 {
        match self {
            Self::Annotation(_) => 0,
            Self::Gap(_) => 1,
            Self::Sample(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    Stored,
    /// Same or older sequence number; dropped.
    Duplicate,
    /// Stored after `n` missing frames.
    Gap(u16),
}

impl IngestOutcome {
    pub fn missing(&self) -> u16 {
        match self {
            Self::Gap(n) => *n,
            _ => 0,
        }
    }
}

/// A recording: header plus an append-only event log in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub info: SessionInfo,
    pub config: SessionConfig,
    events: Vec<SessionEvent>,
    /// Last stored sequence number. The device restarts at seq 1 on CmdStart,
    /// so 0 stands for "nothing yet".
    last_seq: u16,
    stored: usize,
    missing: u64,
}

impl Session {
    pub fn new(
        id: impl Into<SessionId>,
        start_utc: DateTime<Utc>,
        config: SessionConfig,
        device: impl Into<String>,
        device_info: impl Into<String>,
    ) -> Self {
        Self {
            info: SessionInfo {
                id: id.into(),
                start_utc,
                device: device.into(),
                device_info: device_info.into(),
                state: SessionState::Recording,
            },
            config,
            events: Vec::new(),
            last_seq: 0,
            stored: 0,
            missing: 0,
        }
    }

    pub fn id(&self) -> &str {
        &self.info.id
    }

    pub fn state(&self) -> SessionState {
        self.info.state
    }

    pub fn is_recording(&self) -> bool {
        self.info.state == SessionState::Recording
    }

    pub fn stop(&mut self) {
        self.info.state = SessionState::Stopped;
    }

    /// Store a data frame, detecting duplicates and gaps by sequence number.
    pub fn ingest_frame(
        &mut self,
        frame: &DataFrame,
        recv_utc: DateTime<Utc>,
    ) -> Result<IngestOutcome, DaqError> {
        if !self.is_recording() {
            return Err(DaqError::NotRecording(self.info.id.clone()));
        }
        let delta = frame.seq.wrapping_sub(self.last_seq);
        if delta == 0 || delta >= 0x8000 {
            return Ok(IngestOutcome::Duplicate);
        }
        let missing = delta - 1;
        if missing > 0 {
            self.events.push(SessionEvent::Gap(GapEvent {
                t_ms: frame.t_ms,
                after_seq: self.last_seq,
                missing,
            }));
            self.missing += u64::from(missing);
        }
        self.events.push(SessionEvent::Sample(SampleRecord {
            seq: frame.seq,
            t_ms: frame.t_ms,
            recv_utc,
            ph_raw: frame.ph_raw,
            temp_raw: frame.temp_raw,
            ph_mv: self.config.ph_mv(frame.ph_raw),
            temp_c: self.config.temp_c(frame.temp_raw),
        }));
        self.last_seq = frame.seq;
        self.stored += 1;
        Ok(if missing > 0 {
            IngestOutcome::Gap(missing)
        } else {
            IngestOutcome::Stored
        })
    }

    /// Annotations are accepted while recording and after stop.
    pub fn add_annotation(&mut self, a: Annotation) -> Result<Annotation, DaqError> {
        a.validate()?;
        self.events.push(SessionEvent::Annotation(a.clone()));
        Ok(a)
    }

    /// Event log in arrival order.
    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn samples(&self) -> impl Iterator<Item = &SampleRecord> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Sample(s) => Some(s),
            _ => None,
        })
    }

    pub fn annotations(&self) -> impl Iterator<Item = &Annotation> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Annotation(a) => Some(a),
            _ => None,
        })
    }

    pub fn gaps(&self) -> impl Iterator<Item = &GapEvent> {
        self.events.iter().filter_map(|e| match e {
            SessionEvent::Gap(g) => Some(g),
            _ => None,
        })
    }

    pub fn stored_count(&self) -> usize {
        self.stored
    }

    /// Frames known to be lost (sum over gap events).
    pub fn missing_count(&self) -> u64 {
        self.missing
    }

    /// Events sorted by device time; ties put annotations first, then gaps,
    /// then samples, each in arrival order.
    pub fn events_in_time_order(&self) -> Vec<&SessionEvent> {
        let mut ev: Vec<&SessionEvent> = self.events.iter().collect();
        ev.sort_by_key(|e| (e.t_ms(), e.rank()));
        ev
    }

    /// Rebuild from header and events, replaying sequence tracking.
    pub(crate) fn restore(
        info: SessionInfo,
        config: SessionConfig,
        events: Vec<SessionEvent>,
    ) -> Self {
        let mut s = Session {
            info,
            config,
            events: Vec::with_capacity(events.len()),
            last_seq: 0,
            stored: 0,
            missing: 0,
        };
        for e in events {
            match &e {
                SessionEvent::Sample(r) => {
                    s.last_seq = r.seq;
                    s.stored += 1;
                }
                SessionEvent::Gap(g) => s.missing += u64::from(g.missing),
                SessionEvent::Annotation(_) => {}
            }
            s.events.push(e);
        }
        s
    }
}

/// RFC 3339 with millisecond precision and a `Z` suffix.
pub(crate) mod utc_millis {
    use chrono::{DateTime, SecondsFormat, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_rfc3339_opts(SecondsFormat::Millis, true))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let s = String::deserialize(d)?;
        DateTime::parse_from_rfc3339(&s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(serde::de::Error::custom)
    }
}

/// RFC 3339 with millisecond precision and a `Z` suffix.
pub fn format_utc(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::adc_quantize;
    use proptest::prelude::*;

    fn session() -> Session {
        Session::new(
            "s1",
            DateTime::UNIX_EPOCH,
            SessionConfig::default(),
            "sim0",
            "test",
        )
    }

    fn frame(seq: u16) -> DataFrame {
        DataFrame {
            seq,
            t_ms: u32::from(seq) * 100,
            ph_raw: 2048,
            temp_raw: 2100,
        }
    }

    fn ingest(s: &mut Session, seq: u16) -> IngestOutcome {
        s.ingest_frame(&frame(seq), DateTime::UNIX_EPOCH).unwrap()
    }

    #[test]
    fn duplicates_are_dropped() {
        let mut s = session();
        for q in 1..=5 {
            ingest(&mut s, q);
        }
        assert_eq!(ingest(&mut s, 5), IngestOutcome::Duplicate);
        assert_eq!(s.stored_count(), 5);
    }

    #[test]
    fn gaps_are_counted() {
        let mut s = session();
        for q in 1..=5 {
            ingest(&mut s, q);
        }
        assert_eq!(ingest(&mut s, 8), IngestOutcome::Gap(2));
        assert_eq!(s.stored_count(), 6);
        assert_eq!(
            s.gaps().copied().collect::<Vec<_>>(),
            vec![GapEvent {
                t_ms: 800,
                after_seq: 5,
                missing: 2
            }]
        );
    }

    #[test]
    fn wraparound_is_not_a_gap() {
        let mut s = session();
        s.last_seq = 65535;
        assert_eq!(ingest(&mut s, 0), IngestOutcome::Stored);
        assert_eq!(s.missing_count(), 0);
        assert_eq!(ingest(&mut s, 2), IngestOutcome::Gap(1));
    }

    #[test]
    fn leading_loss_counts_from_seq_one() {
        let mut s = session();
        assert_eq!(ingest(&mut s, 4), IngestOutcome::Gap(3));
    }

    #[test]
    fn stale_frames_are_duplicates() {
        let mut s = session();
        ingest(&mut s, 10);
        assert_eq!(ingest(&mut s, 9), IngestOutcome::Duplicate);
    }

    #[test]
    fn stopped_sessions_reject_frames_but_take_annotations() {
        let mut s = session();
        s.stop();
        assert!(matches!(
            s.ingest_frame(&frame(1), DateTime::UNIX_EPOCH),
            Err(DaqError::NotRecording(_))
        ));
        s.add_annotation(Annotation::new("rinse", 0, 10)).unwrap();
    }

    #[test]
    fn annotation_validation() {
        let mut s = session();
        let a = Annotation::new("cal-ph7-a", 0, 600_000).with_ph(7.0);
        assert_eq!(s.add_annotation(a.clone()).unwrap(), a);
        assert!(s.add_annotation(Annotation::new("x", 5, 5)).is_err());
        assert!(s.add_annotation(Annotation::new("x", 6, 5)).is_err());
        assert!(s.add_annotation(Annotation::new("  ", 0, 5)).is_err());
        s.add_annotation(Annotation::new("exposure", 100, 500))
            .unwrap();
        s.add_annotation(Annotation::new("rinse", 300, 900))
            .unwrap();
        assert_eq!(s.annotations().count(), 3);
    }

    #[test]
    fn conversion_uses_session_afe() {
        let mut s = session();
        ingest(&mut s, 1);
        let r = s.samples().next().unwrap();
        assert!(
            (r.ph_mv - (2048.0 * 2048.0 / 4095.0 - 1024.0)).abs() < 1e-9,
            "{}",
            r.ph_mv
        );
        assert!((r.temp_c - 25.0).abs() < 0.1, "{}", r.temp_c);
    }

    proptest! {
        #[test]
        fn raw_to_mv_to_raw(c in 0u16..=4095) {
            let cfg = SessionConfig::default();
            prop_assert_eq!(adc_quantize(cfg.ph_mv(c), &cfg.afe).counts, c);
        }

        #[test]
        fn stored_plus_missing_equals_sent(drops in proptest::collection::vec(any::<bool>(), 1..3000)) {
            let mut s = session();
            let mut last_delivered = 0u32;
            for (i, dropped) in drops.iter().enumerate() {
                let seq = (i as u32 + 1) as u16;
                if !dropped {
                    ingest(&mut s, seq);
                    last_delivered = i as u32 + 1;
                }
            }
            let seen = s.stored_count() as u64 + s.missing_count();
            prop_assert_eq!(seen, u64::from(last_delivered));
            let seqs: Vec<u16> = s.samples().map(|r| r.seq).collect();
            prop_assert!(seqs.windows(2).all(|w| w[1] > w[0]));
        }
    }
}
