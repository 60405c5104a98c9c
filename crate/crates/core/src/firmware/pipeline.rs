use std::collections::VecDeque;

use super::{FirmwareConfig, FirmwareError};
use crate::protocol::{DataFrame, MAX_COUNT};
use crate::rounding::div_round_half_up;

/// Block averager followed by a moving average, for one ADC channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelPipeline {
    avg_n: u8,
    ma_window: u8,
    accumulator: u32,
    block_count: u8,
    ma_buffer: VecDeque<u16>,
}

impl ChannelPipeline {
    pub fn new(avg_n: u8, ma_window: u8) -> Self {
        assert!(avg_n >= 1 && ma_window >= 1);
        Self {
            avg_n,
            ma_window,
            accumulator: 0,
            block_count: 0,
            ma_buffer: VecDeque::with_capacity(usize::from(ma_window)),
        }
    }

    /// Accumulate one raw sample; returns the block mean once `avg_n`
    /// samples are in.
    pub fn ingest_sample(&mut self, raw: u16) -> Result<Option<u16>, FirmwareError> {
        if raw > MAX_COUNT {
            return Err(FirmwareError::RawOutOfRange(raw));
        }
        self.accumulator += u32::from(raw);
        self.block_count += 1;
        if self.block_count < self.avg_n {
            return Ok(None);
        }
        let mean = div_round_half_up(u64::from(self.accumulator), u64::from(self.avg_n));
        self.accumulator = 0;
        self.block_count = 0;
        Ok(Some(mean as u16))
    }

    /// Mean of the last `min(ma_window, seen)` block values. No zero padding
    /// during warm-up.
    pub fn moving_average(&mut self, v: u16) -> u16 {
        if self.ma_buffer.len() == usize::from(self.ma_window) {
            self.ma_buffer.pop_front();
        }
        self.ma_buffer.push_back(v);
        let sum: u64 = self.ma_buffer.iter().map(|&x| u64::from(x)).sum();
        div_round_half_up(sum, self.ma_buffer.len() as u64) as u16
    }

    /// Both stages in sequence.
    pub fn push(&mut self, raw: u16) -> Result<Option<u16>, FirmwareError> {
        Ok(self
            .ingest_sample(raw)?
            .map(|block| self.moving_average(block)))
    }

    pub fn block_count(&self) -> u8 {
        self.block_count
    }
}

/// Two-channel acquisition loop, called once per sample period.
#[derive(Debug, Clone)]
pub struct Firmware {
    config: FirmwareConfig,
    ph: ChannelPipeline,
    temp: ChannelPipeline,
    /// Sequence number of the next frame.
    seq: u16,
    ticks: u64,
}

impl Firmware {
    pub fn new(config: FirmwareConfig) -> Result<Self, FirmwareError> {
        config.validate()?;
        Ok(Self {
            ph: ChannelPipeline::new(config.avg_n, config.ma_window),
            temp: ChannelPipeline::new(config.avg_n, config.ma_window),
            seq: 1,
            ticks: 0,
            config,
        })
    }

    pub fn config(&self) -> &FirmwareConfig {
        &self.config
    }

    /// Ticks since the last reset.
    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn tick(&mut self, ph_raw: u16, temp_raw: u16) -> Result<Option<DataFrame>, FirmwareError> {
        if ph_raw > MAX_COUNT || temp_raw > MAX_COUNT {
            return Err(FirmwareError::RawOutOfRange(ph_raw.max(temp_raw)));
        }
        self.ticks += 1;
        let ph = self.ph.push(ph_raw)?;
        let temp = self.temp.push(temp_raw)?;
        let (Some(ph_raw), Some(temp_raw)) = (ph, temp) else {
            return Ok(None);
        };
        let t_ms = self.ticks * 1000 / u64::from(self.config.sample_hz);
        let frame = DataFrame {
            seq: self.seq,
            t_ms: t_ms as u32,
            ph_raw,
            temp_raw,
        };
        self.seq = self.seq.wrapping_add(1);
        Ok(Some(frame))
    }
}
