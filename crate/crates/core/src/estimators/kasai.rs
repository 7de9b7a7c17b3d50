use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KasaiEstimate {
    /// Mean Doppler frequency in Hz, within `[-prf/2, prf/2]`.
    pub frequency: f64,
    /// `|R(1)|` over the geometric mean of the powers of the two lagged
    /// supports; 1 for a pure phasor.
    pub quality: f64,
}

/// Lag-one autocorrelation sums. Kept separate so callers can pool them
/// over a spatial kernel before taking the phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LagOne {
    pub r1: Complex64,
    pub power_head: f64,
    pub power_tail: f64,
}

impl LagOne {
    pub fn of(s: &[Complex64]) -> Self {
        let mut out = LagOne::default();
        for w in s.windows(2) {
            out.r1 += w[0].conj() * w[1];
            out.power_head += w[0].norm_sqr();
            out.power_tail += w[1].norm_sqr();
        }
        out
    }

    pub fn add(&mut self, other: &LagOne) {
        self.r1 += other.r1;
        self.power_head += other.power_head;
        self.power_tail += other.power_tail;
    }

    pub fn estimate(&self, prf: f64) -> KasaiEstimate {
        let denom = (self.power_head * self.power_tail).sqrt();
        if !(denom > 0.0) {
            return KasaiEstimate {
                frequency: 0.0,
                quality: 0.0,
            };
        }
        KasaiEstimate {
            frequency: prf / (2.0 * PI) * self.r1.im.atan2(self.r1.re),
            quality: (self.r1.norm() / denom).min(1.0),
        }
    }
}

/// Kasai mean-frequency estimate of a slow-time series sampled at `prf`.
pub fn kasai_frequency(slow_time: &[Complex64], prf: f64) -> Result<KasaiEstimate> {
    if slow_time.len() < 2 {
        return Err(Error::domain("slow-time length", "at least 2", slow_time.len() as f64));
    }
    Ok(LagOne::of(slow_time).estimate(prf))
}
