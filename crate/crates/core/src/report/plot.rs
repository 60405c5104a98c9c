use std::fmt::Write;

use crate::analysis::Point;
use crate::daq::Annotation;

pub const MAX_POINTS: usize = 5000;

/// Reduce `series` to at most `max_points` points, keeping the minimum and
/// the maximum of each time bin in their original order. Short series are
/// returned unchanged.
pub fn downsample_minmax(series: &[Point], max_points: usize) -> Vec<Point> {
    if series.len() <= max_points || max_points < 2 {
        return series.to_vec();
    }
    let bins = max_points / 2;
    let t0 = f64::from(series[0].t_ms);
    let span = f64::from(series[series.len() - 1].t_ms) - t0;
    let bin_of = |p: &Point| {
        if span == 0.0 {
            0
        } else {
            (((f64::from(p.t_ms) - t0) / span * bins as f64) as usize).min(bins - 1)
        }
    };
    let mut out = Vec::with_capacity(max_points);
    let mut start = 0;
    while start < series.len() {
        let b = bin_of(&series[start]);
        let end = series[start..]
            .iter()
            .position(|p| bin_of(p) != b)
            .map_or(series.len(), |n| start + n);
        let bin = &series[start..end];
        let (mut lo, mut hi) = (0, 0);
        for (i, p) in bin.iter().enumerate() {
            if p.value < bin[lo].value {
                lo = i;
            }
            if p.value > bin[hi].value {
                hi = i;
            }
        }
        out.push(bin[lo.min(hi)]);
        if lo != hi {
            out.push(bin[lo.max(hi)]);
        }
        start = end;
    }
    out
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

pub struct Anchor {
    pub t_start_ms: u32,
    pub t_end_ms: u32,
    pub value: f64,
}

pub struct Plot<'a> {
    pub series: &'a [Point],
    pub t_end_ms: u32,
    pub y_label: &'a str,
    pub annotations: &'a [Annotation],
    pub anchors: &'a [Anchor],
}

const W: f64 = 960.0;
const H: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

pub(crate) fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round a raw tick spacing up to 1, 2 or 5 × 10^k.
fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

impl Plot<'_> {
    pub fn to_svg(&self) -> String {
        let (mut y_min, mut y_max) = self
            .series
            .iter()
            .map(|p| p.value)
            .chain(self.anchors.iter().map(|a| a.value))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !y_min.is_finite() {
            (y_min, y_max) = (0.0, 1.0);
        }
        let pad = ((y_max - y_min) * 0.05).max(0.1);
        let (y_min, y_max) = (y_min - pad, y_max + pad);
        let t_end = f64::from(self.t_end_ms.max(1));
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let x = |t: f64| LEFT + t / t_end * pw;
        let y = |v: f64| TOP + (y_max - v) / (y_max - y_min) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="100%" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="white" stroke="black"/>"#
        );

        for a in self.annotations {
            let colour = self.colour(&a.label);
            let (x0, x1) = (
                x(f64::from(a.t_start_ms)),
                x(f64::from(a.t_end_ms.min(self.t_end_ms))),
            );
            let _ = writeln!(
                s,
                r#"<rect class="annotation" x="{x0:.2}" y="{TOP}" width="{:.2}" height="{ph}" fill="{colour}" fill-opacity="0.18"><title>{}</title></rect>"#,
                (x1 - x0).max(0.5),
                escape(&a.label)
            );
        }

        let y_step = nice_step((y_max - y_min) / 8.0);
        let mut v = (y_min / y_step).ceil() * y_step;
        while v <= y_max {
            let yy = y(v);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" x2="{:.2}" y1="{yy:.2}" y2="{yy:.2}" stroke="#ddd"/>"##,
                LEFT + pw
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                yy + 4.0,
                tick_label(v, y_step)
            );
            v += y_step;
        }
        let minutes = t_end / 60_000.0;
        let x_step = nice_step(minutes / 10.0);
        let mut m = 0.0;
        while m <= minutes + 1e-9 {
            let xx = x(m * 60_000.0);
            let _ = writeln!(
                s,
                r#"<text x="{xx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                TOP + ph + 16.0,
                tick_label(m, x_step)
            );
            m += x_step;
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">time (min)</text>"#,
            LEFT + pw / 2.0,
            H - 8.0
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(14 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + ph / 2.0,
            escape(self.y_label)
        );

        let points = downsample_minmax(self.series, MAX_POINTS);
        let mut path = String::new();
        for (i, p) in points.iter().enumerate() {
            let _ = write!(
                path,
                "{}{:.2},{:.2}",
                if i == 0 { "M" } else { " L" },
                x(f64::from(p.t_ms)),
                y(p.value)
            );
        }
        let _ = writeln!(
            s,
            r#"<path class="trace" d="{path}" fill="none" stroke="black" stroke-width="1"/>"#
        );

        for a in self.anchors {
            let (x0, x1, yy) = (
                x(f64::from(a.t_start_ms)),
                x(f64::from(a.t_end_ms)),
                y(a.value),
            );
            let _ = writeln!(
                s,
                r##"<g class="anchor"><line x1="{x0:.2}" x2="{x1:.2}" y1="{yy:.2}" y2="{yy:.2}" stroke="#c00" stroke-dasharray="6 3"/><circle cx="{:.2}" cy="{yy:.2}" r="3.5" fill="#c00"/></g>"##,
                (x0 + x1) / 2.0
            );
        }
        s.push_str("</svg>\n");
        s
    }

    fn colour(&self, label: &str) -> &'static str {
        let mut labels: Vec<&str> = self.annotations.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        let i = labels.iter().position(|l| *l == label).unwrap_or(0);
        PALETTE[i % PALETTE.len()]
    }

    pub fn legend(&self) -> Vec<(&str, &'static str)> {
        let mut seen: Vec<&str> = Vec::new();
        for a in self.annotations {
            if !seen.contains(&a.label.as_str()) {
                seen.push(&a.label);
            }
        }
        seen.into_iter().map(|l| (l, self.colour(l))).collect()
    }
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10()).ceil() as usize
    };
    let s = format!("{:.*}", decimals, v);
    if s.starts_with('-') && s.trim_start_matches(['-', '0', '.']).is_empty() {
        s[1..].to_owned()
    } else {
        s
    }
}
