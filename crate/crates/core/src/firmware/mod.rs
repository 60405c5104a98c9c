//! Emulation of the node firmware.
//!
//! Both ADC channels are sampled at `sample_hz`. Each channel averages blocks
//! of `avg_n` samples and smooths the block averages with a moving average of
//! `ma_window` values; one data frame leaves per completed block. Arithmetic
//! is integer with round-half-up at both stages, as on the microcontroller.

mod node;
mod pipeline;

pub use node::{Node, NodeOutput};
pub use pipeline::{ChannelPipeline, Firmware};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::protocol::ConfigFrame;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FirmwareError {
    #[error("raw sample {0} exceeds the 12-bit range")]
    RawOutOfRange(u16),
    #[error("invalid firmware configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FirmwareConfig {
    pub sample_hz: u16,
    pub avg_n: u8,
    /// Moving-average length in frames.
    pub ma_window: u8,
    pub tx_period_ms: u16,
}

impl Default for FirmwareConfig {
    fn default() -> Self {
        Self {
            sample_hz: 100,
            avg_n: 10,
            ma_window: 5,
            tx_period_ms: 100,
        }
    }
}

impl FirmwareConfig {
    pub fn validate(&self) -> Result<(), FirmwareError> {
        let bad = |m: String| Err(FirmwareError::InvalidConfig(m));
        if self.sample_hz == 0 || self.avg_n == 0 || self.ma_window == 0 {
            return bad("sample_hz, avg_n and ma_window must be >= 1".into());
        }
        // sample_hz / avg_n == 1000 / tx_period_ms
        if u32::from(self.sample_hz) * u32::from(self.tx_period_ms) != u32::from(self.avg_n) * 1000
        {
            return bad(format!(
                "{} Hz averaged over {} does not emit every {} ms",
                self.sample_hz, self.avg_n, self.tx_period_ms
            ));
        }
        Ok(())
    }

    /// Config carried by a CmdConfig frame; the emission period follows from
    /// the other two rates.
    pub fn from_frame(frame: &ConfigFrame) -> Result<Self, FirmwareError> {
        let sample_hz = frame.sample_hz.max(1);
        let period = u32::from(frame.avg_n) * 1000 / u32::from(sample_hz);
        let cfg = Self {
            sample_hz: frame.sample_hz,
            avg_n: frame.avg_n,
            ma_window: frame.ma_window,
            tx_period_ms: u16::try_from(period).unwrap_or(u16::MAX),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_frame(&self) -> ConfigFrame {
        ConfigFrame {
            sample_hz: self.sample_hz,
            avg_n: self.avg_n,
            ma_window: self.ma_window,
        }
    }

    pub fn sample_period_s(&self) -> f64 {
        1.0 / f64::from(self.sample_hz)
    }

    /// Group delay of block average plus moving average, relative to the
    /// frame timestamp (which marks the end of the block).
    pub fn group_delay_ms(&self) -> f64 {
        let sample_ms = 1000.0 / f64::from(self.sample_hz);
        (f64::from(self.avg_n) - 1.0) / 2.0 * sample_ms
            + (f64::from(self.ma_window) - 1.0) / 2.0 * f64::from(self.tx_period_ms)
    }
}
