use serde::{Deserialize, Serialize};

use super::calibration::{apply_drift, fit_drift, fit_sensitivity, DriftModel, SensitivityModel};
use super::power::{power_totals, PowerBudget, PowerTotals};
use super::response::{response_rate, Response, Transition};
use super::stats::{stability, window_stats};
use super::{nernst_slope, AnalysisError, Point};
use crate::daq::{Annotation, Session};

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Settling band around the target pH.
    pub band_ph: f64,
    /// Measurement latency removed from settling times. `None` derives it
    /// from the session's firmware and filter configuration.
    pub delay_ms: Option<f64>,
    /// Scale the fitted slope with each sample's temperature.
    pub temperature_compensation: bool,
    pub ref_a: String,
    pub ref_b: String,
    pub power: PowerBudget,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            band_ph: 0.05,
            delay_ms: None,
            temperature_compensation: false,
            ref_a: "cal-ph7-a".into(),
            ref_b: "cal-ph7-b".into(),
            power: PowerBudget::table_i(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub session_id: String,
    pub samples: usize,
    pub duration_s: f64,
    pub gaps: GapMetrics,
    pub drift: Option<DriftMetrics>,
    pub sensitivity: Option<SensitivityMetrics>,
    pub windows: Vec<WindowMetrics>,
    pub responses: Vec<ResponseMetrics>,
    pub temperature: TemperatureMetrics,
    pub power: PowerTotals,
    /// Steps that could not be evaluated, in order of discovery.
    pub warnings: Vec<String>,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialise");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn response(&self, from_ph: f64, to_ph: f64) -> Option<&ResponseMetrics> {
        self.responses
            .iter()
            .find(|r| r.from_ph == from_ph && r.to_ph == to_ph)
    }

    pub fn window(&self, label: &str) -> Option<&WindowMetrics> {
        self.windows.iter().find(|w| w.label == label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapMetrics {
    pub events: usize,
    pub missing: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftMetrics {
    #[serde(flatten)]
    pub model: DriftModel,
    /// Only present once a slope is known.
    pub rate_ph_per_min: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityMetrics {
    #[serde(flatten)]
    pub model: SensitivityModel,
    pub calibration_temp_c: f64,
    pub nernst_mv_per_ph: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub label: String,
    pub t_start_ms: u32,
    pub t_end_ms: u32,
    pub expected_ph: Option<f64>,
    pub n: usize,
    pub mean_mv: f64,
    /// Drift-corrected.
    pub corrected_mean_mv: f64,
    pub stddev_mv: f64,
    pub mean_ph: Option<f64>,
    /// Peak deviation from the window mean, after the entry transient.
    pub stability_ph: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseMetrics {
    pub from_ph: f64,
    pub to_ph: f64,
    pub t_start_ms: u32,
    pub settling_s: f64,
    pub rate_ph_per_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureMetrics {
    pub mean_c: f64,
    pub min_c: f64,
    pub max_c: f64,
}

/// Calibration windows by label convention: `cal-ph<value>[-suffix]`.
/// An explicit `expected_ph` on the annotation wins over the label.
pub fn calibration_windows(annotations: &[Annotation]) -> Vec<Annotation> {
    let mut out: Vec<Annotation> = annotations
        .iter()
        .filter_map(|a| {
            let rest = a.label.strip_prefix("cal-ph")?;
            let from_label = rest.split('-').next()?.parse::<f64>().ok();
            let ph = a.expected_ph.or(from_label)?;
            Some(a.clone().with_ph(ph))
        })
        .collect();
    out.sort_by_key(|a| (a.t_start_ms, a.t_end_ms));
    out
}

/// Run the full post-processing chain over a recorded session.
pub fn analyze(session: &Session, options: &AnalysisOptions) -> Result<Metrics, AnalysisError> {
    let samples: Vec<_> = session.samples().collect();
    if samples.is_empty() {
        return Err(AnalysisError::NoSamples);
    }
    let raw: Vec<Point> = samples
        .iter()
        .map(|r| Point::new(r.t_ms, r.ph_mv))
        .collect();
    let annotations: Vec<Annotation> = session.annotations().cloned().collect();
    let cal = calibration_windows(&annotations);
    let mut warnings = Vec::new();

    let find = |label: &str| cal.iter().find(|a| a.label == label);
    let drift = match (find(&options.ref_a), find(&options.ref_b)) {
        (Some(a), Some(b)) => {
            let fit = window_stats(&raw, a)
                .and_then(|sa| window_stats(&raw, b).and_then(|sb| fit_drift(&sa, &sb)));
            fit.map_err(|e| warnings.push(format!("drift: {e}"))).ok()
        }
        _ => {
            warnings.push(format!(
                "drift: reference windows {:?} and {:?} not both annotated",
                options.ref_a, options.ref_b
            ));
            None
        }
    };
    let corrected = apply_drift(&raw, &drift.unwrap_or(DriftModel::NONE));

    let cal_samples = samples
        .iter()
        .filter(|r| cal.iter().any(|w| w.contains(r.t_ms)));
    let cal_temp = mean(cal_samples.map(|r| r.temp_c)).unwrap_or(25.0);
    let sensitivity = fit_sensitivity(&corrected, &cal, cal_temp)
        .map_err(|e| warnings.push(format!("sensitivity: {e}")))
        .ok();

    let ph: Option<Vec<Point>> = sensitivity.map(|m| {
        samples
            .iter()
            .zip(&corrected)
            .map(|(r, p)| {
                let model = if options.temperature_compensation {
                    m.at_temperature(r.temp_c, cal_temp)
                } else {
                    m
                };
                Point::new(p.t_ms, model.ph(p.value))
            })
            .collect()
    });

    let delay_ms = options.delay_ms.unwrap_or_else(|| {
        session.config.firmware.group_delay_ms() + session.config.afe.rc_tau_s() * 1000.0
    });
    let mut responses = Vec::new();
    // settling time per window index, used to skip the entry transient
    let mut settle_ms = vec![0.0; cal.len()];
    if let Some(ph) = &ph {
        for (i, pair) in cal.windows(2).enumerate() {
            let (prev, cur) = (&pair[0], &pair[1]);
            let (from_ph, to_ph) = (prev.expected_ph.unwrap(), cur.expected_ph.unwrap());
            if from_ph == to_ph {
                continue;
            }
            let transition = Transition {
                from_ph,
                to_ph,
                t_start_ms: cur.t_start_ms,
                t_end_ms: cur.t_end_ms,
            };
            match response_rate(ph, &transition, options.band_ph, delay_ms) {
                Ok(Response {
                    settling_s,
                    rate_ph_per_s,
                }) => {
                    settle_ms[i + 1] = settling_s * 1000.0 + delay_ms;
                    responses.push(ResponseMetrics {
                        from_ph,
                        to_ph,
                        t_start_ms: cur.t_start_ms,
                        settling_s,
                        rate_ph_per_s,
                    });
                }
                Err(e) => warnings.push(format!("response {from_ph}→{to_ph}: {e}")),
            }
        }
    }

    let mut windows = Vec::new();
    for (w, skip) in annotations_for_report(&annotations, &cal, &settle_ms) {
        let Ok(rs) = window_stats(&raw, w) else {
            warnings.push(format!("window {:?}: no samples", w.label));
            continue;
        };
        let cs = window_stats(&corrected, w).expect("same sample times as raw");
        let cal_w = cal
            .iter()
            .find(|c| c.label == w.label && c.t_start_ms == w.t_start_ms);
        let (mean_ph, stability_ph) = match &ph {
            Some(ph) => {
                let mean_ph = window_stats(ph, w).map(|s| s.mean_mv).ok();
                let settled = Annotation::new(
                    w.label.clone(),
                    w.t_start_ms
                        .saturating_add(skip.ceil() as u32)
                        .min(w.t_end_ms - 1),
                    w.t_end_ms,
                );
                (mean_ph, stability(ph, &settled).ok())
            }
            None => (None, None),
        };
        windows.push(WindowMetrics {
            label: w.label.clone(),
            t_start_ms: w.t_start_ms,
            t_end_ms: w.t_end_ms,
            expected_ph: cal_w.and_then(|c| c.expected_ph).or(w.expected_ph),
            n: rs.n,
            mean_mv: rs.mean_mv,
            corrected_mean_mv: cs.mean_mv,
            stddev_mv: rs.stddev_mv,
            mean_ph,
            stability_ph,
        });
    }

    let drift = drift.map(|model| DriftMetrics {
        model,
        rate_ph_per_min: sensitivity.map(|s| model.rate_mv_per_min / s.slope_mv_per_ph),
    });
    let sensitivity = match sensitivity {
        Some(model) => Some(SensitivityMetrics {
            model,
            calibration_temp_c: cal_temp,
            nernst_mv_per_ph: nernst_slope(cal_temp)?,
        }),
        None => None,
    };
    let temps = samples.iter().map(|r| r.temp_c).filter(|t| t.is_finite());
    let temperature = TemperatureMetrics {
        mean_c: mean(temps.clone()).unwrap_or(f64::NAN),
        min_c: temps.clone().fold(f64::INFINITY, f64::min),
        max_c: temps.fold(f64::NEG_INFINITY, f64::max),
    };
    let first = samples.first().unwrap().t_ms;
    let last = samples.last().unwrap().t_ms;
    Ok(Metrics {
        session_id: session.id().to_owned(),
        samples: samples.len(),
        duration_s: f64::from(last - first) / 1000.0,
        gaps: GapMetrics {
            events: session.gaps().count(),
            missing: session.missing_count(),
        },
        drift,
        sensitivity,
        windows,
        responses,
        temperature,
        power: power_totals(&options.power),
        warnings,
    })
}

/// Every annotation in time order with the transient to skip (ms) before
/// measuring stability. Only calibration windows entered by a step have one.
fn annotations_for_report<'a>(
    all: &'a [Annotation],
    cal: &[Annotation],
    settle_ms: &[f64],
) -> Vec<(&'a Annotation, f64)> {
    let mut out: Vec<_> = all
        .iter()
        .map(|a| {
            let skip = cal
                .iter()
                .position(|c| c.label == a.label && c.t_start_ms == a.t_start_ms)
                .map_or(0.0, |i| settle_ms[i]);
            (a, skip)
        })
        .collect();
    out.sort_by_key(|(a, _)| (a.t_start_ms, a.t_end_ms));
    out
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, sum) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_map_to_ph() {
        let anns = vec![
            Annotation::new("cal-ph10", 500, 600),
            Annotation::new("cal-ph7-a", 0, 100),
            Annotation::new("exposure", 100, 200),
            Annotation::new("cal-ph4.01", 300, 400),
            Annotation::new("cal-phX", 300, 400),
            Annotation::new("cal-ph-b", 700, 800).with_ph(7.0),
        ];
        let cal = calibration_windows(&anns);
        let got: Vec<_> = cal
            .iter()
            .map(|a| (a.label.as_str(), a.expected_ph.unwrap()))
            .collect();
        assert_eq!(
            got,
            [
                ("cal-ph7-a", 7.0),
                ("cal-ph4.01", 4.01),
                ("cal-ph10", 10.0),
                ("cal-ph-b", 7.0)
            ]
        );
    }
}
