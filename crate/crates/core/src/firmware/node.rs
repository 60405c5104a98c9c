use super::{Firmware, FirmwareConfig, FirmwareError};
use crate::device::FrontendSample;
use crate::protocol::{ack_status, status_flags, AckFrame, DataFrame, StatusFrame, TelemetryFrame};

const STATUS_PERIOD_MS: u64 = 10_000;
const BATTERY_FULL_MV: f64 = 4150.0;
const BATTERY_EMPTY_MV: f64 = 3300.0;
/// Rough discharge slope at the node's ~9 mW draw.
const BATTERY_MV_PER_HOUR: f64 = 60.0;

/// Frames produced by one tick of the node.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeOutput {
    pub data: Option<DataFrame>,
    pub status: Option<StatusFrame>,
}

/// The wireless node: firmware acquisition loop plus command handling.
#[derive(Debug, Clone)]
pub struct Node {
    firmware: Firmware,
    streaming: bool,
    ready: bool,
    saturated_since_status: bool,
    uptime_ms: f64,
}

impl Node {
    pub fn new(config: FirmwareConfig, electrode_ready: bool) -> Result<Self, FirmwareError> {
        Ok(Self {
            firmware: Firmware::new(config)?,
            streaming: false,
            ready: electrode_ready,
            saturated_since_status: false,
            uptime_ms: 0.0,
        })
    }

    pub fn config(&self) -> &FirmwareConfig {
        self.firmware.config()
    }

    pub fn is_streaming(&self) -> bool {
        self.streaming
    }

    /// Apply a command; returns the ack to send back. Idempotent, so retried
    /// commands are harmless.
    pub fn handle_command(&mut self, cmd: &TelemetryFrame) -> Option<TelemetryFrame> {
        let status = match cmd {
            TelemetryFrame::CmdStart => {
                if !self.streaming {
                    // fresh acquisition: seq restarts at 1, device time at 0
                    self.firmware = Firmware::new(self.config().clone()).ok()?;
                    self.streaming = true;
                }
                ack_status::OK
            }
            TelemetryFrame::CmdStop => {
                self.streaming = false;
                ack_status::OK
            }
            TelemetryFrame::CmdConfig(c) => match FirmwareConfig::from_frame(c) {
                Ok(cfg) if !self.streaming || cfg == *self.config() => {
                    if cfg != *self.config() {
                        self.firmware = Firmware::new(cfg).ok()?;
                    }
                    ack_status::OK
                }
                _ => ack_status::REJECTED,
            },
            _ => return None,
        };
        Some(TelemetryFrame::Ack(AckFrame {
            cmd: cmd.frame_type() as u8,
            status,
        }))
    }

    /// One sample period. Samples are ignored while not streaming.
    pub fn tick(&mut self, sample: FrontendSample) -> Result<NodeOutput, FirmwareError> {
        let period_ms = 1000.0 / f64::from(self.config().sample_hz);
        self.uptime_ms += period_ms;
        if !self.streaming {
            return Ok(NodeOutput::default());
        }
        self.saturated_since_status |= sample.ph.saturated || sample.temp.saturated;
        let data = self.firmware.tick(sample.ph.counts, sample.temp.counts)?;
        let status = data
            .filter(|d| u64::from(d.t_ms) % STATUS_PERIOD_MS == 0)
            .map(|_| self.status());
        Ok(NodeOutput { data, status })
    }

    fn status(&mut self) -> StatusFrame {
        let mut flags = status_flags::STREAMING;
        if self.ready {
            flags |= status_flags::READY;
        }
        if std::mem::take(&mut self.saturated_since_status) {
            flags |= status_flags::SATURATED;
        }
        let hours = self.uptime_ms / 3.6e6;
        let battery = (BATTERY_FULL_MV - BATTERY_MV_PER_HOUR * hours).max(BATTERY_EMPTY_MV);
        StatusFrame {
            battery_mv: battery.round() as u16,
            flags,
        }
    }
}
