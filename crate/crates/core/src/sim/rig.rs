use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use chrono::{DateTime, TimeDelta, Utc};

use super::{Scenario, SimError};
use crate::daq::{Annotation, CommandChannel, DaqHost, Session, SessionId};
use crate::device::{DeviceError, Frontend};
use crate::firmware::Node;
use crate::protocol::{
    encode, CommandOutcome, DecodeEvent, Diagnostic, FrameDecoder, LinkError, LossyLink,
    StatusFrame, TelemetryFrame,
};

/// What actually happened on the device and the link, for checking the
/// host's view against.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    /// Data frames handed to the link.
    pub frames_sent: u64,
    pub frames_dropped: u64,
    /// Data frames lost after the last delivered one; no later frame exists
    /// to reveal them as a gap.
    pub tail_dropped: u64,
    pub status_sent: u64,
    pub last_status: Option<StatusFrame>,
    pub diagnostics: Vec<Diagnostic>,
}

/// A finished offline run.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub session: Session,
    pub truth: GroundTruth,
}

/// Frames in flight, ordered by arrival time then send order.
type InFlight = BinaryHeap<Reverse<(u64, u64, Vec<u8>)>>;

/// The simulated device wired to a [`DaqHost`].
///
/// Device time starts when the node accepts `CmdStart`; the bath schedule,
/// frame timestamps and annotations all use it. Host receive times are that
/// instant plus link latency, offset from the scenario's `start_utc`.
#[derive(Debug)]
pub struct Rig {
    scenario: Scenario,
    frontend: Frontend,
    node: Node,
    link: LossyLink,
    decoder: FrameDecoder,
    session_id: SessionId,
    pending_windows: VecDeque<Annotation>,
    in_flight: InFlight,
    sent_order: u64,
    tick: u64,
    total_ticks: u64,
    /// Host clock (ms since `start_utc`) at device time zero.
    host_offset_ms: u64,
    truth: GroundTruth,
}

struct DeviceChannel<'a> {
    link: &'a mut LossyLink,
    node: &'a mut Node,
    now_ms: &'a mut u64,
    stream_start_ms: &'a mut Option<u64>,
}

impl CommandChannel for DeviceChannel<'_> {
    fn command(&mut self, cmd: &TelemetryFrame) -> Result<CommandOutcome, LinkError> {
        let node = &mut *self.node;
        let started = &mut *self.stream_start_ms;
        let outcome = self.link.request(cmd, *self.now_ms, |c, arrives| {
            let was_streaming = node.is_streaming();
            let reply = node.handle_command(c);
            if !was_streaming && node.is_streaming() {
                *started = Some(arrives);
            }
            reply
        });
        if let Ok(o) = &outcome {
            *self.now_ms = o.completed_at_ms;
        }
        outcome
    }
}

impl Rig {
    /// Build the device, then configure and start it through the host.
    pub fn start(scenario: &Scenario, host: &DaqHost) -> Result<Self, SimError> {
        scenario.validate()?;
        if !scenario.hydrated {
            return Err(DeviceError::ElectrodeNotReady.into());
        }
        let frontend = Frontend::new(
            scenario.electrode(),
            scenario.afe.clone(),
            scenario.temp_sensor.clone(),
            scenario.bath(),
            scenario.hydrated,
        )?;
        let mut node = Node::new(scenario.firmware.clone(), scenario.hydrated)?;
        let mut link = LossyLink::new(scenario.link())?;
        let mut now_ms = 0;
        let mut stream_start_ms = None;
        let session_id = host.start_session(
            &scenario.device,
            &scenario.name,
            scenario.session_config(),
            scenario.start_utc,
            &mut DeviceChannel {
                link: &mut link,
                node: &mut node,
                now_ms: &mut now_ms,
                stream_start_ms: &mut stream_start_ms,
            },
        )?;
        let hz = u64::from(scenario.firmware.sample_hz);
        Ok(Self {
            frontend,
            node,
            link,
            decoder: FrameDecoder::new(),
            session_id,
            pending_windows: scenario.windows().into(),
            in_flight: InFlight::new(),
            sent_order: 0,
            tick: 0,
            total_ticks: u64::from(scenario.duration_ms()) * hz / 1000,
            host_offset_ms: stream_start_ms.unwrap_or(now_ms),
            truth: GroundTruth::default(),
            scenario: scenario.clone(),
        })
    }

    /// Offline run of a whole scenario on a private host.
    pub fn run(scenario: &Scenario) -> Result<SimRun, SimError> {
        let host = DaqHost::new();
        let mut rig = Rig::start(scenario, &host)?;
        rig.advance(&host, u64::MAX)?;
        let id = rig.session_id.clone();
        let truth = rig.finish(&host)?;
        let session = host.session(&id)?.read().unwrap().clone();
        Ok(SimRun { session, truth })
    }

    pub fn session_id(&self) -> &str {
        &self.session_id
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn truth(&self) -> &GroundTruth {
        &self.truth
    }

    /// Device time of the last sample taken.
    pub fn device_time_ms(&self) -> u64 {
        self.tick_us(self.tick) / 1000
    }

    pub fn is_done(&self) -> bool {
        self.tick >= self.total_ticks
    }

    fn tick_us(&self, tick: u64) -> u64 {
        tick * 1_000_000 / u64::from(self.node.config().sample_hz)
    }

    fn recv_utc(&self, device_ms: u64) -> DateTime<Utc> {
        let ms = (self.host_offset_ms + device_ms).min(i64::MAX as u64) as i64;
        self.scenario.start_utc + TimeDelta::milliseconds(ms)
    }

    /// Run the device up to device time `until_ms` (capped at the scenario
    /// duration), delivering frames and annotations that are due.
    pub fn advance(&mut self, host: &DaqHost, until_ms: u64) -> Result<(), SimError> {
        while self.tick < self.total_ticks
            && self.tick_us(self.tick + 1) <= until_ms.saturating_mul(1000)
        {
            let dt_us = self.tick_us(self.tick + 1) - self.tick_us(self.tick);
            self.tick += 1;
            let sample = self.frontend.sample(dt_us as f64 / 1e6)?;
            let out = self.node.tick(sample)?;
            let now = self.device_time_ms();
            if let Some(data) = out.data {
                self.truth.frames_sent += 1;
                if self.send(TelemetryFrame::Data(data), now) {
                    self.truth.tail_dropped = 0;
                } else {
                    self.truth.frames_dropped += 1;
                    self.truth.tail_dropped += 1;
                }
            }
            if let Some(status) = out.status {
                self.truth.status_sent += 1;
                self.truth.last_status = Some(status);
                self.send(TelemetryFrame::Status(status), now);
            }
            self.deliver(host, now)?;
        }
        Ok(())
    }

    fn send(&mut self, frame: TelemetryFrame, now_ms: u64) -> bool {
        match self.link.transmit(encode(&frame), now_ms) {
            Some(d) => {
                self.sent_order += 1;
                self.in_flight
                    .push(Reverse((d.deliver_at_ms, self.sent_order, d.payload)));
                true
            }
            None => false,
        }
    }

    fn deliver(&mut self, host: &DaqHost, now_ms: u64) -> Result<(), SimError> {
        while let Some(Reverse((at, _, _))) = self.in_flight.peek() {
            if *at > now_ms {
                break;
            }
            let Reverse((at, _, bytes)) = self.in_flight.pop().unwrap();
            for ev in self.decoder.push(&bytes) {
                match ev {
                    DecodeEvent::Frame(TelemetryFrame::Data(d)) => {
                        host.ingest_frame(&self.session_id, &d, self.recv_utc(at))?;
                    }
                    DecodeEvent::Frame(_) => {}
                    DecodeEvent::Diagnostic(d) => self.truth.diagnostics.push(d),
                }
            }
        }
        while self
            .pending_windows
            .front()
            .is_some_and(|w| u64::from(w.t_end_ms) <= now_ms)
        {
            let w = self.pending_windows.pop_front().unwrap();
            host.add_annotation(&self.session_id, w)?;
        }
        Ok(())
    }

    /// Drain the link, record outstanding annotations and stop the session.
    pub fn finish(mut self, host: &DaqHost) -> Result<GroundTruth, SimError> {
        self.deliver(host, u64::MAX)?;
        for ev in self.decoder.finish() {
            if let DecodeEvent::Diagnostic(d) = ev {
                self.truth.diagnostics.push(d);
            }
        }
        let end_ms = self.device_time_ms();
        let mut now_ms = self.host_offset_ms + end_ms + self.link.params().latency_ms;
        let mut started = None;
        host.stop_session(
            &self.session_id,
            &mut DeviceChannel {
                link: &mut self.link,
                node: &mut self.node,
                now_ms: &mut now_ms,
                stream_start_ms: &mut started,
            },
        )?;
        Ok(self.truth)
    }
}
