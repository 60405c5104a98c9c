use serde::{Deserialize, Serialize};

use super::DeviceError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSegment {
    pub start_s: f64,
    pub ph: f64,
}

/// Piecewise-constant bath pH over time, at a fixed temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathSchedule {
    pub segments: Vec<BathSegment>,
    pub temp_c: f64,
}

impl BathSchedule {
    pub fn new(segments: Vec<BathSegment>, temp_c: f64) -> Self {
        Self { segments, temp_c }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.segments.is_empty() {
            return Err(DeviceError::InvalidParams("bath schedule is empty".into()));
        }
        for pair in self.segments.windows(2) {
            if !(pair[1].start_s > pair[0].start_s) {
                return Err(DeviceError::InvalidParams(format!(
                    "segment start times must strictly increase ({} then {})",
                    pair[0].start_s, pair[1].start_s
                )));
            }
        }
        if let Some(s) = self.segments.iter().find(|s| !(0.0..=14.0).contains(&s.ph)) {
            return Err(DeviceError::InvalidParams(format!(
                "segment pH {} outside [0, 14]",
                s.ph
            )));
        }
        if self.segments[0].start_s < 0.0 {
            return Err(DeviceError::InvalidParams("negative segment start".into()));
        }
        Ok(())
    }

    /// pH of the segment active at `t_us`; the first segment extends back to
    /// t = 0.
    pub fn ph_at_us(&self, t_us: u64) -> f64 {
        self.segments
            .iter()
            .take_while(|s| seconds_to_us(s.start_s) <= t_us)
            .last()
            .or(self.segments.first())
            .map(|s| s.ph)
            .unwrap_or(7.0)
    }

    pub fn ph_at(&self, t_s: f64) -> f64 {
        self.ph_at_us(seconds_to_us(t_s))
    }

    pub fn ph_range(&self) -> (f64, f64) {
        self.segments
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.ph), hi.max(s.ph))
            })
    }
}

fn seconds_to_us(t_s: f64) -> u64 {
    (t_s.max(0.0) * 1e6).round() as u64
}
