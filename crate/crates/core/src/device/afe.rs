use serde::{Deserialize, Serialize};

use super::DeviceError;

/// Analog front end: JFET source follower, RC low-pass and ADC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfeParams {
    /// Gate-source capacitance.
    pub c_gs_pf: f64,
    /// Gate-drain capacitance.
    pub c_gd_pf: f64,
    /// Source-follower gain; the gain error is calibrated out downstream.
    pub buffer_gain: f64,
    /// Offset added before the ADC so the bipolar electrode potential sits
    /// inside the unipolar input range.
    pub bias_offset_mv: f64,
    pub adc_fullscale_mv: f64,
    pub adc_bits: u8,
    /// Corner frequency of the RC filter ahead of the ADC.
    pub rc_cutoff_hz: f64,
}

impl Default for AfeParams {
    /// 4 pF input capacitance, unity gain, 2048 mV full scale with pH 7 at
    /// mid-scale (counts 2048).
    fn default() -> Self {
        Self {
            c_gs_pf: 3.0,
            c_gd_pf: 1.0,
            buffer_gain: 1.0,
            bias_offset_mv: 1024.0,
            adc_fullscale_mv: 2048.0,
            adc_bits: 12,
            rc_cutoff_hz: 10.0,
        }
    }
}

impl AfeParams {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let bad = |m: &str| Err(DeviceError::InvalidParams(m.to_owned()));
        if !(self.c_gs_pf + self.c_gd_pf > 0.0) || self.c_gs_pf < 0.0 || self.c_gd_pf < 0.0 {
            return bad("JFET capacitances must be non-negative with a positive sum");
        }
        if !(self.buffer_gain > 0.0 && self.buffer_gain <= 1.0) {
            return bad("buffer gain must lie in (0, 1]");
        }
        if self.adc_bits != 12 {
            return bad("the converter is 12-bit");
        }
        if !(self.adc_fullscale_mv > 0.0) {
            return bad("ADC full scale must be > 0");
        }
        if !(self.rc_cutoff_hz > 0.0) {
            return bad("RC cutoff must be > 0");
        }
        if !self.bias_offset_mv.is_finite() {
            return bad("bias offset must be finite");
        }
        Ok(())
    }

    /// Total JFET input capacitance `C_iss = C_gs + C_gd`.
    pub fn c_iss_pf(&self) -> f64 {
        self.c_gs_pf + self.c_gd_pf
    }

    pub fn max_count(&self) -> u16 {
        ((1u32 << self.adc_bits) - 1) as u16
    }

    /// Size of one ADC step referred to the electrode.
    pub fn lsb_mv(&self) -> f64 {
        self.adc_fullscale_mv / f64::from(self.max_count()) / self.buffer_gain
    }

    /// The temperature sensor feeds the ADC directly: no buffer, no bias.
    pub fn temperature_path(&self) -> AfeParams {
        AfeParams {
            buffer_gain: 1.0,
            bias_offset_mv: 0.0,
            ..self.clone()
        }
    }

    /// Time constant of the RC filter.
    pub fn rc_tau_s(&self) -> f64 {
        1.0 / (2.0 * std::f64::consts::PI * self.rc_cutoff_hz)
    }
}

/// Magnitude of the buffer input impedance in GΩ.
///
/// Below the gate leakage corner the JFET input looks like its input
/// capacitance, so `|Z_in(f)| = 1 / (2π·f·C_iss)`.
pub fn input_impedance(afe: &AfeParams, freq_hz: f64) -> Result<f64, DeviceError> {
    if !(freq_hz > 0.0) {
        return Err(DeviceError::NonPositiveFrequency(freq_hz));
    }
    let c_farad = afe.c_iss_pf() * 1e-12;
    let ohms = 1.0 / (2.0 * std::f64::consts::PI * freq_hz * c_farad);
    Ok(ohms * 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdcReading {
    pub counts: u16,
    /// Input was clamped at either rail.
    pub saturated: bool,
}

/// Convert a buffer input voltage to ADC counts, rounding half up and
/// clamping silently at the rails.
pub fn adc_quantize(v_mv: f64, afe: &AfeParams) -> AdcReading {
    let v = v_mv * afe.buffer_gain + afe.bias_offset_mv;
    let clamped = v.clamp(0.0, afe.adc_fullscale_mv);
    let scaled = clamped / afe.adc_fullscale_mv * f64::from(afe.max_count());
    AdcReading {
        counts: (scaled + 0.5).floor() as u16,
        saturated: !(0.0..=afe.adc_fullscale_mv).contains(&v),
    }
}

/// Inverse of [`adc_quantize`] for in-range counts.
pub fn adc_to_mv(counts: u16, afe: &AfeParams) -> f64 {
    let v = f64::from(counts) / f64::from(afe.max_count()) * afe.adc_fullscale_mv;
    (v - afe.bias_offset_mv) / afe.buffer_gain
}

/// First-order RC low-pass, discretised exactly for a held input.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RcFilter {
    out: Option<f64>,
}

impl RcFilter {
    pub fn filter(&mut self, input: f64, dt_s: f64, cutoff_hz: f64) -> f64 {
        let y = match self.out {
            // power-up: capacitor charged to the input
            None => input,
            Some(prev) => {
                let alpha = -(-dt_s * 2.0 * std::f64::consts::PI * cutoff_hz).exp_m1();
                prev + (input - prev) * alpha
            }
        };
        self.out = Some(y);
        y
    }
}
