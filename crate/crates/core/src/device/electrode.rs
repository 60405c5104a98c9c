use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{BathSchedule, DeviceError};

/// Lumped model of the glass electrode.
///
/// The membrane potential follows the Nernst relation with a reduced
/// (aged) slope, plus a linear drift in time and white Gaussian noise:
///
/// ```text
/// E(t) = e0 + s·(7 − pH_surface(t)) + d·t_min + n(seed, t)
/// ```
///
/// `pH_surface` lags the bath pH through a first-order response with time
/// constant `tau_s` (see [`step`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElectrodeParams {
    /// Potential at pH 7 and t = 0.
    pub e0_mv: f64,
    pub sensitivity_mv_per_ph: f64,
    pub drift_mv_per_min: f64,
    pub tau_s: f64,
    pub noise_sigma_mv: f64,
    pub source_impedance_gohm: f64,
    pub rng_seed: u64,
}

impl Default for ElectrodeParams {
    /// An aged electrode: 31 mV/pH, drifting 0.005 pH/min (0.155 mV/min at
    /// that slope), settling a 6 pH step into ±0.05 pH after 3.2 s.
    fn default() -> Self {
        Self {
            e0_mv: 0.0,
            sensitivity_mv_per_ph: 31.0,
            drift_mv_per_min: 0.155,
            tau_s: 0.67,
            noise_sigma_mv: 0.6,
            source_impedance_gohm: 5.1,
            rng_seed: 0,
        }
    }
}

impl ElectrodeParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let bad = |m: &str| Err(DeviceError::InvalidParams(m.to_owned()));
        if !(self.sensitivity_mv_per_ph > 0.0) {
            return bad("electrode sensitivity must be > 0");
        }
        if !(self.tau_s > 0.0) {
            return bad("electrode tau_s must be > 0");
        }
        if !(self.noise_sigma_mv >= 0.0) {
            return bad("electrode noise_sigma_mv must be >= 0");
        }
        if !(self.source_impedance_gohm > 0.0) {
            return bad("electrode source impedance must be > 0");
        }
        if !self.e0_mv.is_finite() || !self.drift_mv_per_min.is_finite() {
            return bad("electrode e0 and drift must be finite");
        }
        Ok(())
    }
}

/// Time-varying part of the electrode model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeState {
    /// Virtual time in microseconds; integer so long runs do not accumulate
    /// rounding error at segment boundaries.
    pub t_us: u64,
    /// Lagged pH seen by the membrane.
    pub ph_surface: f64,
    /// Membrane soaked and ready.
    pub hydrated: bool,
}

impl ElectrodeState {
    /// Equilibrated with the bath at t = 0.
    pub fn at_rest(schedule: &BathSchedule) -> Self {
        Self {
            t_us: 0,
            ph_surface: schedule.ph_at_us(0),
            hydrated: true,
        }
    }

    pub fn t_s(&self) -> f64 {
        self.t_us as f64 * 1e-6
    }

    pub fn t_min(&self) -> f64 {
        self.t_us as f64 / 60e6
    }
}

/// Electrode potential in millivolts for the current state.
///
/// Deterministic: the noise term is derived from `(rng_seed, t_us)` only, so
/// the same state always yields the same value.
pub fn electrode_potential(
    params: &ElectrodeParams,
    state: &ElectrodeState,
) -> Result<f64, DeviceError> {
    if !state.hydrated {
        return Err(DeviceError::ElectrodeNotReady);
    }
    let nernst = params.sensitivity_mv_per_ph * (7.0 - state.ph_surface);
    let drift = params.drift_mv_per_min * state.t_min();
    let noise = if params.noise_sigma_mv > 0.0 {
        params.noise_sigma_mv * unit_normal(params.rng_seed, state.t_us)
    } else {
        0.0
    };
    Ok(params.e0_mv + nernst + drift + noise)
}

fn unit_normal(seed: u64, t_us: u64) -> f64 {
    let key = seed ^ t_us.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    StandardNormal.sample(&mut rng)
}

/// Advance the membrane by `dt_s` seconds.
///
/// The surface pH relaxes toward the bath pH active at the start of the
/// interval: `ph' = ph + (target − ph)·(1 − e^(−dt/τ))`. The update is a
/// convex combination, so it never overshoots the target.
pub fn step(
    state: &ElectrodeState,
    schedule: &BathSchedule,
    params: &ElectrodeParams,
    dt_s: f64,
) -> ElectrodeState {
    debug_assert!(dt_s > 0.0, "step requires dt_s > 0");
    let dt_s = dt_s.max(0.0);
    let target = schedule.ph_at_us(state.t_us);
    let alpha = -(-dt_s / params.tau_s).exp_m1();
    ElectrodeState {
        t_us: state.t_us + (dt_s * 1e6).round() as u64,
        ph_surface: state.ph_surface + (target - state.ph_surface) * alpha,
        hydrated: state.hydrated,
    }
}
