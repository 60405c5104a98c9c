//! Post-processing: window statistics, two-point drift compensation,
//! sensitivity fitting, mV → pH conversion, response and stability metrics,
//! and the power budget.
//!
//! Every function here is pure. [`analyze`] chains them over a recorded
//! [`Session`](crate::Session) and returns a serialisable [`Metrics`]
//! document.

mod calibration;
mod pipeline;
mod power;
mod response;
mod stats;

pub use calibration::{
    apply_drift, fit_drift, fit_sensitivity, fit_sensitivity_points, nernst_slope, to_ph,
    DriftModel, SensitivityModel,
};
pub use pipeline::{
    analyze, calibration_windows, AnalysisOptions, DriftMetrics, GapMetrics, Metrics,
    ResponseMetrics, SensitivityMetrics, TemperatureMetrics, WindowMetrics,
};
pub use power::{power_totals, PowerBudget, PowerEntry, PowerTotals};
pub use response::{response_rate, Response, Transition};
pub use stats::{stability, window_stats, WindowStats};

use thiserror::Error;

/// One value on the device timebase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub t_ms: u32,
    pub value: f64,
}

impl Point {
    pub fn new(t_ms: u32, value: f64) -> Self {
        Self { t_ms, value }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("window {0:?} contains no samples")]
    EmptyWindow(String),
    #[error("reference windows must be ordered in time (t_a = {t_a} ms, t_b = {t_b} ms)")]
    ReferenceOrder { t_a: f64, t_b: f64 },
    #[error("sensitivity fit needs windows at two or more distinct pH values")]
    Rank,
    #[error("fitted slope {slope:.2} mV/pH outside (0, {max:.2}]")]
    SlopeOutOfRange { slope: f64, max: f64 },
    #[error("temperature {0} °C outside (-20, 100)")]
    TemperatureOutOfRange(f64),
    #[error("signal never settles within ±{band} pH of {to_ph} before {t_end_ms} ms")]
    NoSettle {
        to_ph: f64,
        band: f64,
        t_end_ms: u32,
    },
    #[error("session has no samples")]
    NoSamples,
    #[error("invalid power budget: {0}")]
    InvalidBudget(String),
}
