use serde::{Deserialize, Serialize};

use super::DeviceError;

/// Linear approximation of the analog temperature sensor, which has a
/// negative temperature coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TempSensorParams {
    pub v25_mv: f64,
    pub k_mv_per_c: f64,
}

impl Default for TempSensorParams {
    fn default() -> Self {
        Self {
            v25_mv: 1050.0,
            k_mv_per_c: 5.19,
        }
    }
}

pub fn temp_sensor_mv(temp_c: f64, params: &TempSensorParams) -> Result<f64, DeviceError> {
    if !(-10.0..=60.0).contains(&temp_c) {
        return Err(DeviceError::TemperatureOutOfRange(temp_c));
    }
    Ok(params.v25_mv - params.k_mv_per_c * (temp_c - 25.0))
}

/// Inverse transfer function; `None` when the sensor has no slope.
pub fn temp_from_mv(v_mv: f64, params: &TempSensorParams) -> Option<f64> {
    (params.k_mv_per_c != 0.0).then(|| 25.0 - (v_mv - params.v25_mv) / params.k_mv_per_c)
}
