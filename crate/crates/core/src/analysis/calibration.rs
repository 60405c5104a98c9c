use serde::{Deserialize, Serialize};

use super::stats::{window_stats, WindowStats};
use super::{AnalysisError, Point};
use crate::daq::Annotation;

const GAS_CONSTANT: f64 = 8.314462618;
const FARADAY: f64 = 96485.33212;
const ZERO_CELSIUS_K: f64 = 273.15;
/// Fitted slopes may exceed the ideal electrode by this much before the fit
/// is rejected.
const SLOPE_MARGIN_MV: f64 = 5.0;

/// Linear electrode drift anchored at the first reference window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub rate_mv_per_min: f64,
    pub t_ref_ms: f64,
    pub e_ref_mv: f64,
}

impl DriftModel {
    pub const NONE: DriftModel = DriftModel {
        rate_mv_per_min: 0.0,
        t_ref_ms: 0.0,
        e_ref_mv: 0.0,
    };

    /// Drift contribution at `t_ms` relative to the anchor.
    pub fn offset_mv(&self, t_ms: f64) -> f64 {
        self.rate_mv_per_min * (t_ms - self.t_ref_ms) / 60_000.0
    }
}

/// Drift from two windows measured at the same pH.
pub fn fit_drift(ref_a: &WindowStats, ref_b: &WindowStats) -> Result<DriftModel, AnalysisError> {
    if ref_b.mean_t_ms <= ref_a.mean_t_ms {
        return Err(AnalysisError::ReferenceOrder {
            t_a: ref_a.mean_t_ms,
            t_b: ref_b.mean_t_ms,
        });
    }
    let minutes = (ref_b.mean_t_ms - ref_a.mean_t_ms) / 60_000.0;
    Ok(DriftModel {
        rate_mv_per_min: (ref_b.mean_mv - ref_a.mean_mv) / minutes,
        t_ref_ms: ref_a.mean_t_ms,
        e_ref_mv: ref_a.mean_mv,
    })
}

/// `E'(t) = E(t) − rate·(t − t_ref)`, extrapolated beyond both anchors.
pub fn apply_drift(series: &[Point], model: &DriftModel) -> Vec<Point> {
    series
        .iter()
        .map(|p| Point::new(p.t_ms, p.value - model.offset_mv(f64::from(p.t_ms))))
        .collect()
}

/// Electrode response line. `slope_mv_per_ph` is reported positive: the
/// potential falls as pH rises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityModel {
    pub slope_mv_per_ph: f64,
    pub e7_mv: f64,
}

impl SensitivityModel {
    /// Scale the slope from the calibration temperature to `temp_c`
    /// (proportional to absolute temperature, as the Nernst slope is).
    pub fn at_temperature(&self, temp_c: f64, cal_temp_c: f64) -> SensitivityModel {
        SensitivityModel {
            slope_mv_per_ph: self.slope_mv_per_ph * (temp_c + ZERO_CELSIUS_K)
                / (cal_temp_c + ZERO_CELSIUS_K),
            ..*self
        }
    }

    pub fn ph(&self, e_mv: f64) -> f64 {
        7.0 + (self.e7_mv - e_mv) / self.slope_mv_per_ph
    }
}

/// Ideal glass-electrode slope in mV/pH.
pub fn nernst_slope(temp_c: f64) -> Result<f64, AnalysisError> {
    if !(temp_c > -20.0 && temp_c < 100.0) {
        return Err(AnalysisError::TemperatureOutOfRange(temp_c));
    }
    Ok(std::f64::consts::LN_10 * GAS_CONSTANT * (temp_c + ZERO_CELSIUS_K) / FARADAY * 1000.0)
}

/// Least-squares line through `(pH, mean potential)` pairs.
///
/// The slope must be positive and no steeper than the Nernst slope at
/// `temp_c` plus a 5 mV/pH margin.
pub fn fit_sensitivity_points(
    points: &[(f64, f64)],
    temp_c: f64,
) -> Result<SensitivityModel, AnalysisError> {
    let n = points.len() as f64;
    if n == 0.0 {
        return Err(AnalysisError::Rank);
    }
    let x_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - x_mean).powi(2)).sum();
    if points.iter().all(|p| p.0 == points[0].0) || sxx == 0.0 {
        return Err(AnalysisError::Rank);
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - x_mean) * (p.1 - y_mean)).sum();
    let d_e_d_ph = sxy / sxx;
    let model = SensitivityModel {
        slope_mv_per_ph: -d_e_d_ph,
        e7_mv: y_mean + d_e_d_ph * (7.0 - x_mean),
    };
    let max = nernst_slope(temp_c)? + SLOPE_MARGIN_MV;
    if !(model.slope_mv_per_ph > 0.0 && model.slope_mv_per_ph <= max) {
        return Err(AnalysisError::SlopeOutOfRange {
            slope: model.slope_mv_per_ph,
            max,
        });
    }
    Ok(model)
}

/// Fit over the window means of a drift-corrected series. Windows without
/// an expected pH are ignored.
pub fn fit_sensitivity(
    corrected: &[Point],
    windows: &[Annotation],
    temp_c: f64,
) -> Result<SensitivityModel, AnalysisError> {
    let points = windows
        .iter()
        .filter_map(|w| w.expected_ph.map(|ph| (ph, w)))
        .map(|(ph, w)| window_stats(corrected, w).map(|s| (ph, s.mean_mv)))
        .collect::<Result<Vec<_>, _>>()?;
    fit_sensitivity_points(&points, temp_c)
}

/// `pH(t) = 7 + (e7 − E'(t)) / slope`.
pub fn to_ph(corrected: &[Point], model: &SensitivityModel) -> Vec<Point> {
    corrected
        .iter()
        .map(|p| Point::new(p.t_ms, model.ph(p.value)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(mean_mv: f64, mean_t_ms: f64) -> WindowStats {
        WindowStats {
            mean_mv,
            mean_t_ms,
            stddev_mv: 0.0,
            n: 1,
        }
    }

    #[test]
    fn flat_references_give_zero_rate() {
        let m = fit_drift(&stats(12.0, 0.0), &stats(12.0, 60_000.0)).unwrap();
        assert_eq!(m.rate_mv_per_min, 0.0);
    }

    #[test]
    fn drift_over_five_hours() {
        let m = fit_drift(&stats(0.0, 0.0), &stats(46.5, 300.0 * 60_000.0)).unwrap();
        assert!((m.rate_mv_per_min - 0.155).abs() < 1e-12);
        // 0.155 mV/min on a 31 mV/pH electrode
        assert!((m.rate_mv_per_min / 31.0 - 0.005).abs() < 1e-12);
    }

    #[test]
    fn swapped_references_are_rejected() {
        let err = fit_drift(&stats(0.0, 10.0), &stats(1.0, 5.0)).unwrap_err();
        assert!(matches!(err, AnalysisError::ReferenceOrder { .. }));
        assert!(fit_drift(&stats(0.0, 10.0), &stats(1.0, 10.0)).is_err());
    }

    #[test]
    fn zero_rate_is_identity() {
        let s = vec![Point::new(0, 1.5), Point::new(7_000, -3.0)];
        assert_eq!(apply_drift(&s, &DriftModel::NONE), s);
    }

    #[test]
    fn pure_drift_flattens() {
        let rate = 0.155;
        let s: Vec<_> = (0..3000u32)
            .map(|i| Point::new(i * 6000, 20.0 + rate * f64::from(i * 6000) / 60_000.0))
            .collect();
        let m = DriftModel {
            rate_mv_per_min: rate,
            t_ref_ms: 0.0,
            e_ref_mv: 20.0,
        };
        assert!(apply_drift(&s, &m)
            .iter()
            .all(|p| (p.value - 20.0).abs() < 1e-9));
    }

    #[test]
    fn corrected_references_agree() {
        let s: Vec<_> = (0..1000u32)
            .map(|i| Point::new(i * 100, 3.0 + 0.01 * f64::from(i) + f64::from(i % 7) * 0.1))
            .collect();
        let (a, b) = (
            Annotation::new("a", 0, 20_000),
            Annotation::new("b", 70_000, 100_000),
        );
        let m = fit_drift(
            &window_stats(&s, &a).unwrap(),
            &window_stats(&s, &b).unwrap(),
        )
        .unwrap();
        let c = apply_drift(&s, &m);
        let (ca, cb) = (window_stats(&c, &a).unwrap(), window_stats(&c, &b).unwrap());
        assert!((ca.mean_mv - cb.mean_mv).abs() < 1e-9);
    }

    #[test]
    fn exact_three_point_line() {
        let m = fit_sensitivity_points(&[(4.0, 93.0), (7.0, 0.0), (10.0, -93.0)], 25.0).unwrap();
        assert!((m.slope_mv_per_ph - 31.0).abs() < 1e-12);
        assert!(m.e7_mv.abs() < 1e-12);
    }

    #[test]
    fn two_points_fit_exactly() {
        let pts = [(4.0, 50.0), (9.0, -75.0)];
        let m = fit_sensitivity_points(&pts, 25.0).unwrap();
        for (ph, e) in pts {
            assert!((m.ph(e) - ph).abs() < 1e-12);
        }
    }

    #[test]
    fn fresh_electrode_slope() {
        let s = nernst_slope(25.0).unwrap();
        let pts: Vec<_> = [4.0, 7.0, 10.0]
            .iter()
            .map(|&ph| (ph, 12.0 + s * (7.0 - ph)))
            .collect();
        let m = fit_sensitivity_points(&pts, 25.0).unwrap();
        assert!((m.slope_mv_per_ph - 59.16).abs() < 0.01);
    }

    #[test]
    fn degenerate_fits() {
        assert_eq!(
            fit_sensitivity_points(&[(7.0, 0.0), (7.0, 3.0)], 25.0),
            Err(AnalysisError::Rank)
        );
        assert_eq!(fit_sensitivity_points(&[], 25.0), Err(AnalysisError::Rank));
        // potential rising with pH
        let inverted = fit_sensitivity_points(&[(4.0, -10.0), (10.0, 10.0)], 25.0);
        assert!(matches!(
            inverted,
            Err(AnalysisError::SlopeOutOfRange { .. })
        ));
        // steeper than physically possible
        let steep = fit_sensitivity_points(&[(4.0, 300.0), (10.0, -300.0)], 25.0);
        assert!(matches!(steep, Err(AnalysisError::SlopeOutOfRange { .. })));
    }

    #[test]
    fn nernst_values() {
        assert!((nernst_slope(25.0).unwrap() - 59.16).abs() < 0.01);
        assert!((nernst_slope(0.0).unwrap() - 54.20).abs() < 0.01);
        assert!(nernst_slope(37.0).unwrap() > nernst_slope(25.0).unwrap());
        assert!(nernst_slope(-20.0).is_err());
        assert!(nernst_slope(100.0).is_err());
        assert!(nernst_slope(f64::NAN).is_err());
    }

    #[test]
    fn to_ph_examples() {
        let m = SensitivityModel {
            slope_mv_per_ph: 31.0,
            e7_mv: 4.0,
        };
        let ph = to_ph(&[Point::new(0, 4.0), Point::new(1, 97.0)], &m);
        assert_eq!(ph[0].value, 7.0);
        assert!((ph[1].value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_scaling() {
        let m = SensitivityModel {
            slope_mv_per_ph: 31.0,
            e7_mv: 0.0,
        };
        assert_eq!(m.at_temperature(25.0, 25.0), m);
        let hot = m.at_temperature(37.0, 25.0);
        let ratio = nernst_slope(37.0).unwrap() / nernst_slope(25.0).unwrap();
        assert!((hot.slope_mv_per_ph / 31.0 - ratio).abs() < 1e-12);
    }
}
