use super::{AnalysisError, Point};
use crate::daq::Annotation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub mean_mv: f64,
    pub mean_t_ms: f64,
    /// Population standard deviation.
    pub stddev_mv: f64,
    pub n: usize,
}

fn in_window<'a>(series: &'a [Point], window: &'a Annotation) -> impl Iterator<Item = &'a Point> {
    series.iter().filter(|p| window.contains(p.t_ms))
}

/// Mean value and mean time over `t_start ≤ t < t_end`.
pub fn window_stats(series: &[Point], window: &Annotation) -> Result<WindowStats, AnalysisError> {
    let (n, sum_v, sum_t) = in_window(series, window).fold((0usize, 0.0, 0.0), |(n, v, t), p| {
        (n + 1, v + p.value, t + f64::from(p.t_ms))
    });
    if n == 0 {
        return Err(AnalysisError::EmptyWindow(window.label.clone()));
    }
    let mean_mv = sum_v / n as f64;
    let var = in_window(series, window)
        .map(|p| (p.value - mean_mv).powi(2))
        .sum::<f64>()
        / n as f64;
    Ok(WindowStats {
        mean_mv,
        mean_t_ms: sum_t / n as f64,
        stddev_mv: var.sqrt(),
        n,
    })
}

/// Largest absolute deviation from the window mean.
pub fn stability(series: &[Point], window: &Annotation) -> Result<f64, AnalysisError> {
    let mean = window_stats(series, window)?.mean_mv;
    Ok(in_window(series, window)
        .map(|p| (p.value - mean).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: &[(u32, f64)]) -> Vec<Point> {
        values.iter().map(|&(t, v)| Point::new(t, v)).collect()
    }

    #[test]
    fn constant_window() {
        let s: Vec<_> = (0..50).map(|i| Point::new(i * 100, 100.0)).collect();
        let w = window_stats(&s, &Annotation::new("w", 0, 5000)).unwrap();
        assert_eq!((w.mean_mv, w.stddev_mv, w.n), (100.0, 0.0, 50));
        assert_eq!(stability(&s, &Annotation::new("w", 0, 5000)).unwrap(), 0.0);
    }

    #[test]
    fn two_points() {
        let s = series(&[(0, 90.0), (100, 110.0)]);
        let w = window_stats(&s, &Annotation::new("w", 0, 101)).unwrap();
        assert_eq!((w.mean_mv, w.mean_t_ms, w.stddev_mv), (100.0, 50.0, 10.0));
    }

    #[test]
    fn end_is_exclusive() {
        let s = series(&[(0, 1.0), (100, 2.0), (200, 30.0)]);
        let w = window_stats(&s, &Annotation::new("w", 100, 200)).unwrap();
        assert_eq!((w.mean_mv, w.n), (2.0, 1));
        assert!(matches!(
            window_stats(&s, &Annotation::new("w", 300, 400)),
            Err(AnalysisError::EmptyWindow(_))
        ));
        assert!(stability(&s, &Annotation::new("w", 300, 400)).is_err());
    }

    #[test]
    fn ramp_mean_is_midpoint() {
        let s: Vec<_> = (0..=1000)
            .map(|i| Point::new(i, 3.0 + 0.25 * f64::from(i)))
            .collect();
        let w = window_stats(&s, &Annotation::new("ramp", 0, 1001)).unwrap();
        let brute: f64 = s.iter().map(|p| p.value).sum::<f64>() / s.len() as f64;
        assert!((w.mean_mv - brute).abs() < 1e-9);
        assert!((w.mean_mv - (3.0 + 0.25 * 500.0)).abs() < 1e-9);
        assert_eq!(w.mean_t_ms, 500.0);
    }

    #[test]
    fn single_excursion() {
        let mut s: Vec<_> = (0..100).map(|i| Point::new(i * 100, 7.0)).collect();
        s[40].value += 0.2;
        let got = stability(&s, &Annotation::new("w", 0, 10_000)).unwrap();
        let mean = s.iter().map(|p| p.value).sum::<f64>() / 100.0;
        let brute = s.iter().map(|p| (p.value - mean).abs()).fold(0.0, f64::max);
        assert_eq!(got, brute);
        assert!((got - 0.198).abs() < 1e-9);
    }
}
