//! Physics model of the intraoral front end.
//!
//! The signal path mirrors the hardware: a glass electrode with a GΩ source
//! impedance drives a JFET source follower, whose output passes through an RC
//! low-pass filter into a 12-bit ADC. A second ADC channel digitises an analog
//! temperature sensor. Every component is a plain value type advanced on a
//! virtual clock by [`Frontend::sample`].

mod afe;
mod bath;
mod electrode;
mod temperature;

pub use afe::{adc_quantize, adc_to_mv, input_impedance, AdcReading, AfeParams, RcFilter};
pub use bath::{BathSchedule, BathSegment};
pub use electrode::{electrode_potential, step, ElectrodeParams, ElectrodeState};
pub use temperature::{temp_from_mv, temp_sensor_mv, TempSensorParams};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("frequency must be positive, got {0} Hz (impedance is unbounded at DC)")]
    NonPositiveFrequency(f64),
    #[error("electrode is not hydrated; soak the membrane before measuring")]
    ElectrodeNotReady,
    #[error("temperature {0} °C outside the sensor range [-10, 60]")]
    TemperatureOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

/// Electrode, buffer, filter and ADC advanced together on the virtual clock.
#[derive(Debug, Clone)]
pub struct Frontend {
    electrode: ElectrodeParams,
    afe: AfeParams,
    temp_sensor: TempSensorParams,
    schedule: BathSchedule,
    state: ElectrodeState,
    rc: RcFilter,
}

/// One simultaneous conversion of both ADC channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrontendSample {
    pub ph: AdcReading,
    pub temp: AdcReading,
}

impl Frontend {
    pub fn new(
        electrode: ElectrodeParams,
        afe: AfeParams,
        temp_sensor: TempSensorParams,
        schedule: BathSchedule,
        hydrated: bool,
    ) -> Result<Self, DeviceError> {
        electrode.validate()?;
        afe.validate()?;
        schedule.validate()?;
        let mut state = ElectrodeState::at_rest(&schedule);
        state.hydrated = hydrated;
        Ok(Self {
            electrode,
            afe,
            temp_sensor,
            schedule,
            state,
            rc: RcFilter::default(),
        })
    }

    pub fn state(&self) -> &ElectrodeState {
        &self.state
    }

    pub fn schedule(&self) -> &BathSchedule {
        &self.schedule
    }

    pub fn afe(&self) -> &AfeParams {
        &self.afe
    }

    /// Advance the model by `dt_s` and convert both channels.
    pub fn sample(&mut self, dt_s: f64) -> Result<FrontendSample, DeviceError> {
        self.state = step(&self.state, &self.schedule, &self.electrode, dt_s);
        let e_mv = electrode_potential(&self.electrode, &self.state)?;
        let buffered = self.rc.filter(e_mv, dt_s, self.afe.rc_cutoff_hz);
        let ph = adc_quantize(buffered, &self.afe);
        let temp_mv = temp_sensor_mv(self.schedule.temp_c, &self.temp_sensor)?;
        let temp = adc_quantize(temp_mv, &self.afe.temperature_path());
        Ok(FrontendSample { ph, temp })
    }
}
