use serde::{Deserialize, Serialize};

use super::{AnalysisError, Point};

/// A commanded pH step and the span in which to look for settling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from_ph: f64,
    pub to_ph: f64,
    pub t_start_ms: u32,
    pub t_end_ms: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub settling_s: f64,
    pub rate_ph_per_s: f64,
}

/// Settling time into `±band` of the target and the resulting rate.
///
/// The settling instant is the linearly interpolated crossing into the
/// band after the last out-of-band sample. `delay_ms` is subtracted from it
/// to remove known measurement latency (filter group delay). If the first
/// sample is already in band the result is one sample period, which is
/// also the lower bound after delay compensation.
pub fn response_rate(
    ph: &[Point],
    transition: &Transition,
    band: f64,
    delay_ms: f64,
) -> Result<Response, AnalysisError> {
    let pts: Vec<Point> = ph
        .iter()
        .filter(|p| p.t_ms > transition.t_start_ms && p.t_ms < transition.t_end_ms)
        .copied()
        .collect();
    let no_settle = AnalysisError::NoSettle {
        to_ph: transition.to_ph,
        band,
        t_end_ms: transition.t_end_ms,
    };
    let excess = |p: &Point| (p.value - transition.to_ph).abs() - band;
    let first = pts.first().ok_or(no_settle.clone())?;
    let period_ms = match pts.get(1) {
        Some(second) => f64::from(second.t_ms - first.t_ms),
        None => f64::from(first.t_ms - transition.t_start_ms),
    };
    let settled_ms = match pts.iter().rposition(|p| excess(p) > 0.0) {
        None => period_ms,
        Some(i) if i + 1 == pts.len() => return Err(no_settle),
        Some(i) => {
            let (out, inb) = (pts[i], pts[i + 1]);
            let (d_out, d_in) = (excess(&out), excess(&inb));
            let frac = d_out / (d_out - d_in);
            let crossing = f64::from(out.t_ms) + frac * f64::from(inb.t_ms - out.t_ms);
            (crossing - f64::from(transition.t_start_ms) - delay_ms).max(period_ms)
        }
    };
    let settling_s = settled_ms / 1000.0;
    Ok(Response {
        settling_s,
        rate_ph_per_s: (transition.from_ph - transition.to_ph).abs() / settling_s,
    })
}
