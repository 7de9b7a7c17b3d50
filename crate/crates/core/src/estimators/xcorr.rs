//! Normalized cross-correlation with three-point parabolic peak refinement.
//!
//! Lag `l` compares `a[i]` with `b[i + l]` over every overlapping pair,
//! with the mean of each segment removed. A positive lag means the content
//! of `b` sits to the right of the content of `a`.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Line sample type. Real lines score by the signed coefficient, complex
/// (analytic) lines by its magnitude, which ignores a common phase shift.
pub trait CorrSample: Copy + Send + Sync {
    fn to_complex(self) -> Complex64;
    fn score(coefficient: Complex64) -> f64;
}

impl CorrSample for f64 {
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    fn score(coefficient: Complex64) -> f64 {
        coefficient.re
    }
}

impl CorrSample for Complex64 {
    fn to_complex(self) -> Complex64 {
        self
    }

    fn score(coefficient: Complex64) -> f64 {
        coefficient.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagEstimate {
    /// Fractional lag in samples.
    pub lag: f64,
    /// Peak correlation coefficient clamped to `[0, 1]`.
    pub quality: f64,
}

fn has_variance<T: CorrSample>(x: &[T]) -> bool {
    let n = x.len() as f64;
    let mean = x.iter().fold(Complex64::new(0.0, 0.0), |s, v| s + v.to_complex()) / n;
    let var = x.iter().map(|v| (v.to_complex() - mean).norm_sqr()).sum::<f64>() / n;
    let scale = x.iter().map(|v| v.to_complex().norm_sqr()).sum::<f64>() / n;
    var > 1e-24 * scale.max(f64::MIN_POSITIVE) && var > 0.0
}

fn coefficient(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let m = a.len() as f64;
    let mean_a = a.iter().sum::<Complex64>() / m;
    let mean_b = b.iter().sum::<Complex64>() / m;
    let (mut num, mut pa, mut pb) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x - mean_a, y - mean_b);
        num += x.conj() * y;
        pa += x.norm_sqr();
        pb += y.norm_sqr();
    }
    let den = (pa * pb).sqrt();
    if den > 0.0 {
        num / den
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Normalized complex correlation coefficients for lags `-max_lag..=max_lag`.
pub fn xcorr_curve<T: CorrSample>(a: &[T], b: &[T], max_lag: usize) -> Result<Vec<Complex64>> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::Shape(alloc::format!("line lengths differ: {} vs {}", n, b.len())));
    }
    if n < 2 * max_lag + 8 {
        return Err(Error::domain("line length", "at least 2 * max_lag + 8", n as f64));
    }
    if !has_variance(a) || !has_variance(b) {
        return Err(Error::FlatSignal);
    }
    let ac: Vec<Complex64> = a.iter().map(|v| v.to_complex()).collect();
    let bc: Vec<Complex64> = b.iter().map(|v| v.to_complex()).collect();
    let m = max_lag as isize;
    let mut out = Vec::with_capacity(2 * max_lag + 1);
    for lag in -m..=m {
        // every pair (a[i], b[i + lag]) inside both lines
        let lo = (-lag).max(0) as usize;
        let hi = n - lag.max(0) as usize;
        let wa = &ac[lo..hi];
        let wb = &bc[(lo as isize + lag) as usize..(hi as isize + lag) as usize];
        out.push(coefficient(wa, wb));
    }
    Ok(out)
}

/// Index of the largest score refined by a parabola through it and its
/// neighbours, plus the sampled peak value. Edge peaks are not refined.
pub fn refine_peak(scores: &[f64]) -> (f64, f64) {
    let (idx, &peak) = scores
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, (i, v)| if *v > *best.1 { (i, v) } else { best });
    if idx == 0 || idx + 1 >= scores.len() {
        return (idx as f64, peak);
    }
    let (y0, y1, y2) = (scores[idx - 1], peak, scores[idx + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    let delta = if curvature < 0.0 {
        (0.5 * (y0 - y2) / curvature).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    (idx as f64 + delta, peak)
}

/// Lag and peak score of a coefficient curve produced for `max_lag`.
pub fn peak_lag<T: CorrSample>(curve: &[Complex64], max_lag: usize) -> LagEstimate {
    let scores: Vec<f64> = curve.iter().map(|c| T::score(*c)).collect();
    let (mut pos, peak) = refine_peak(&scores);
    if peak >= 1.0 - 1e-12 {
        // perfect match at an integer lag
        pos = pos.round();
    }
    LagEstimate {
        lag: pos - max_lag as f64,
        quality: peak.clamp(0.0, 1.0),
    }
}

/// Fractional shift of `b` relative to `a`, searched over `|lag| <= max_lag`.
pub fn xcorr_lag<T: CorrSample>(a: &[T], b: &[T], max_lag: usize) -> Result<LagEstimate> {
    let curve = xcorr_curve(a, b, max_lag)?;
    Ok(peak_lag::<T>(&curve, max_lag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn smooth(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                (0.21 * t).sin() + 0.6 * (0.13 * t + 1.0).cos() + 0.3 * (0.37 * t + 0.4).sin()
            })
            .collect()
    }

    #[test]
    fn integer_shift() {
        let a = smooth(200);
        let mut b = alloc::vec![0.0; 200];
        b[3..].copy_from_slice(&a[..197]);
        let e = xcorr_lag(&a, &b, 6).unwrap();
        assert!((e.lag - 3.0).abs() < 0.01, "{}", e.lag);
        assert!(e.quality > 0.99);
    }

    #[test]
    fn identical_lines() {
        let a = smooth(64);
        let e = xcorr_lag(&a, &a, 4).unwrap();
        assert!(e.lag.abs() < 1e-12, "{}", e.lag);
        assert!((e.quality - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complex_lines_ignore_common_phase() {
        let a: Vec<Complex64> = smooth(128)
            .iter()
            .zip(smooth(140).iter().skip(12))
            .map(|(r, i)| Complex64::new(*r, *i))
            .collect();
        let rot = Complex64::from_polar(1.0, 0.4 * PI);
        let mut b = alloc::vec![Complex64::new(0.0, 0.0); 128];
        for i in 2..128 {
            b[i] = a[i - 2] * rot;
        }
        let e = xcorr_lag(&a, &b, 5).unwrap();
        assert!((e.lag - 2.0).abs() < 0.01);
    }

    #[test]
    fn flat_and_short_lines() {
        let a = smooth(40);
        assert_eq!(xcorr_lag(&a, &[1.0; 40], 4), Err(Error::FlatSignal));
        assert!(xcorr_lag(&a[..15], &a[..15], 4).is_err());
    }

    #[test]
    fn parabola_vertex() {
        // samples of -(x - 0.3)^2 at -1, 0, 1
        let s = [-(1.3f64).powi(2), -(0.3f64).powi(2), -(0.7f64).powi(2)];
        let (p, _) = refine_peak(&s);
        assert!((p - 1.3).abs() < 1e-12);
    }
}
