//! Print-ready HTML reports with an embedded SVG plot.
//!
//! The document is self-contained (no scripts, no external assets) and
//! byte-for-byte deterministic for identical inputs.

mod plot;

pub use plot::{downsample_minmax, MAX_POINTS};

use std::fmt::Write;

use thiserror::Error;

use crate::analysis::{Metrics, Point, SensitivityModel};
use crate::daq::{Annotation, Session};
use plot::{escape, Anchor, Plot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("session has no samples to plot")]
    NoSamples,
    #[error("metrics belong to session {metrics:?}, not {session:?}")]
    SessionMismatch { session: String, metrics: String },
}

const STYLE: &str = "body{font-family:sans-serif;max-width:1000px;margin:2em auto;color:#222}\
table{border-collapse:collapse;margin:0.5em 0 1.5em}\
td,th{border:1px solid #bbb;padding:3px 8px;text-align:left}\
td.num{text-align:right;font-variant-numeric:tabular-nums}\
.legend span{display:inline-block;width:12px;height:12px;margin:0 4px 0 12px;opacity:0.5}\
@media print{body{margin:0}}";

fn fmt(v: f64, decimals: usize) -> String {
    if v.is_finite() {
        format!("{:.*}", decimals, v)
    } else {
        "n/a".into()
    }
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "n/a".into(), |v| fmt(v, decimals))
}

fn row(out: &mut String, name: &str, value: &str, unit: &str) {
    let _ = writeln!(
        out,
        r#"<tr><th>{}</th><td class="num">{}</td><td>{}</td></tr>"#,
        escape(name),
        escape(value),
        escape(unit)
    );
}

/// pH trace when a calibration is available, otherwise raw millivolts.
fn trace(
    session: &Session,
    metrics: &Metrics,
) -> (Vec<Point>, &'static str, Option<SensitivityModel>) {
    let drift = metrics.drift.map(|d| d.model);
    let corrected = session.samples().map(|r| {
        let off = drift.map_or(0.0, |d| d.offset_mv(f64::from(r.t_ms)));
        Point::new(r.t_ms, r.ph_mv - off)
    });
    match metrics.sensitivity {
        Some(s) => (
            corrected
                .map(|p| Point::new(p.t_ms, s.model.ph(p.value)))
                .collect(),
            "pH (drift corrected)",
            Some(s.model),
        ),
        None => (corrected.collect(), "potential (mV)", None),
    }
}

/// Render the report for `session` with its computed `metrics`.
pub fn render_report(session: &Session, metrics: &Metrics) -> Result<String, ReportError> {
    if metrics.session_id != session.id() {
        return Err(ReportError::SessionMismatch {
            session: session.id().to_owned(),
            metrics: metrics.session_id.clone(),
        });
    }
    let (series, y_label, model) = trace(session, metrics);
    let last = series.last().ok_or(ReportError::NoSamples)?;
    let annotations: Vec<Annotation> = session.annotations().cloned().collect();
    let anchors: Vec<Anchor> = metrics
        .windows
        .iter()
        .filter(|w| w.expected_ph.is_some())
        .filter_map(|w| {
            let value = match model {
                Some(_) => w.mean_ph?,
                None => w.corrected_mean_mv,
            };
            Some(Anchor {
                t_start_ms: w.t_start_ms,
                t_end_ms: w.t_end_ms,
                value,
            })
        })
        .collect();
    let t_end_ms = annotations
        .iter()
        .map(|a| a.t_end_ms)
        .fold(last.t_ms, u32::max);
    let plot = Plot {
        series: &series,
        t_end_ms,
        y_label,
        annotations: &annotations,
        anchors: &anchors,
    };

    let info = &session.info;
    let title = format!("pH telemetry report: {}", info.id);
    let mut h = String::new();
    let _ = writeln!(
        h,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">"
    );
    let _ = writeln!(
        h,
        "<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>",
        escape(&title)
    );
    let _ = writeln!(h, "<h1>{}</h1>", escape(&title));

    h.push_str("<table class=\"session\">\n");
    row(&mut h, "Device", &info.device, &info.device_info);
    row(
        &mut h,
        "Start",
        &crate::daq::format_utc(&info.start_utc),
        "UTC",
    );
    row(
        &mut h,
        "Duration",
        &fmt(metrics.duration_s / 60.0, 1),
        "min",
    );
    row(&mut h, "Samples", &metrics.samples.to_string(), "");
    row(
        &mut h,
        "Gaps",
        &metrics.gaps.events.to_string(),
        &format!("{} frames missing", metrics.gaps.missing),
    );
    h.push_str("</table>\n");

    h.push_str("<h2>Measurement</h2>\n");
    h.push_str(&plot.to_svg());
    h.push_str("<p class=\"legend\">");
    for (label, colour) in plot.legend() {
        let _ = write!(
            h,
            r#"<span style="background:{colour}"></span>{}"#,
            escape(label)
        );
    }
    if !anchors.is_empty() {
        h.push_str(r#"<span style="background:#c00"></span>calibration anchor"#);
    }
    h.push_str("</p>\n");

    h.push_str("<h2>Calibration</h2>\n<table class=\"metrics\">\n");
    match metrics.drift {
        Some(d) => {
            row(&mut h, "Drift", &fmt(d.model.rate_mv_per_min, 4), "mV/min");
            row(&mut h, "Drift", &opt(d.rate_ph_per_min, 5), "pH/min");
        }
        None => row(&mut h, "Drift", "n/a", ""),
    }
    match metrics.sensitivity {
        Some(s) => {
            row(
                &mut h,
                "Sensitivity",
                &fmt(s.model.slope_mv_per_ph, 2),
                "mV/pH",
            );
            row(
                &mut h,
                "Nernst slope",
                &fmt(s.nernst_mv_per_ph, 2),
                &format!("mV/pH at {} °C", fmt(s.calibration_temp_c, 1)),
            );
            row(&mut h, "E(pH 7)", &fmt(s.model.e7_mv, 2), "mV");
        }
        None => row(&mut h, "Sensitivity", "n/a", ""),
    }
    for r in &metrics.responses {
        let name = format!("Response pH {} → {}", r.from_ph, r.to_ph);
        row(&mut h, &name, &fmt(r.settling_s, 2), "s");
        row(&mut h, &name, &fmt(r.rate_ph_per_s, 3), "pH/s");
    }
    row(
        &mut h,
        "Temperature",
        &fmt(metrics.temperature.mean_c, 1),
        "°C",
    );
    h.push_str("</table>\n");

    h.push_str("<h2>Windows</h2>\n<table class=\"windows\">\n<tr><th>Label</th><th>Start (min)</th><th>End (min)</th><th>Expected pH</th><th>Mean pH</th><th>Stability (±pH)</th><th>n</th></tr>\n");
    for w in &metrics.windows {
        let _ = writeln!(
            h,
            r#"<tr><td>{}</td><td class="num">{}</td><td class="num">{}</td><td class="num">{}</td><td class="num">{}</td><td class="num">{}</td><td class="num">{}</td></tr>"#,
            escape(&w.label),
            fmt(f64::from(w.t_start_ms) / 60_000.0, 1),
            fmt(f64::from(w.t_end_ms) / 60_000.0, 1),
            opt(w.expected_ph, 2),
            opt(w.mean_ph, 3),
            opt(w.stability_ph, 3),
            w.n
        );
    }
    h.push_str("</table>\n");

    h.push_str("<h2>Power at 3.3 V</h2>\n<table class=\"power\">\n");
    row(&mut h, "Full system", &fmt(metrics.power.total_mw, 2), "mW");
    row(
        &mut h,
        "Without optional loads",
        &fmt(metrics.power.total_without_optional_mw, 2),
        "mW",
    );
    row(
        &mut h,
        "Intraoral",
        &fmt(metrics.power.intraoral_mw, 2),
        "mW",
    );
    h.push_str("</table>\n");

    if !metrics.warnings.is_empty() {
        h.push_str("<h2>Warnings</h2>\n<ul>\n");
        for w in &metrics.warnings {
            let _ = writeln!(h, "<li>{}</li>", escape(w));
        }
        h.push_str("</ul>\n");
    }
    h.push_str("</body>\n</html>\n");
    Ok(h)
}
