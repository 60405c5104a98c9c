//! Digital twin of a wireless intraoral pH telemetry system.
//!
//! The crate is organised along the measurement chain:
//!
//! * [`device`]: lumped physics of the glass electrode, the JFET buffer with
//!   its RC filter, the temperature sensor and the 12-bit ADC.
//! * [`firmware`]: the node's acquisition chain (100 Hz sampling, block
//!   averaging, moving average, 10 Hz frame emission) and command handling.
//! * [`protocol`]: the binary telemetry frame codec and a seeded lossy link.
//! * [`daq`]: host-side sessions, ingestion with gap detection, annotations
//!   and JSONL/CSV export.
//! * [`analysis`]: two-point time-based drift compensation, sensitivity
//!   fitting, response and stability metrics, and the power budget.
//! * [`sim`]: scenario files and the virtual-clock rig that wires all of the
//!   above together.
//! * [`report`]: self-contained HTML reports with an embedded SVG plot.
//!
//! Everything runs on a virtual clock, so a five hour measurement replays in
//! a few seconds and is bit-for-bit reproducible for a fixed seed.

pub mod analysis;
pub mod daq;
pub mod device;
pub mod firmware;
pub mod protocol;
pub mod report;
pub mod sim;

mod rounding;

pub use analysis::{analyze, AnalysisOptions, Metrics};
pub use daq::{Annotation, DaqHost, SampleRecord, Session};
pub use protocol::{decode, encode, TelemetryFrame};
pub use sim::{Rig, Scenario};

#[cfg(test)]
pub(crate) fn scenario_for_tests(duration_s: f64) -> sim::Scenario {
    let mut s = sim::Scenario::fig2();
    s.name = "test".into();
    s.duration_s = duration_s;
    s.segments.truncate(1);
    s.segments[0].label = None;
    s
}
