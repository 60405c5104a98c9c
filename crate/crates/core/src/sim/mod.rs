//! Closed-loop simulation: bath schedule → electrode → front end → firmware
//! → wire codec over a lossy link → acquisition host, on a virtual clock.

mod rig;
mod scenario;

pub use rig::{GroundTruth, Rig, SimRun};
pub use scenario::{Scenario, ScenarioAnnotation, ScenarioSegment};

use thiserror::Error;

use crate::daq::DaqError;
use crate::device::DeviceError;
use crate::firmware::FirmwareError;
use crate::protocol::LinkError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Firmware(#[from] FirmwareError),
    #[error(transparent)]
    Link(#[from] LinkError),
    #[error(transparent)]
    Daq(#[from] DaqError),
}
