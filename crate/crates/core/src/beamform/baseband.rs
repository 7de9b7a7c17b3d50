//! Quadrature demodulation to complex baseband.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

/// Order of the Butterworth low-pass (applied forward and backward).
pub const LOWPASS_ORDER: usize = 6;

/// Direct-form-I biquad with real coefficients, normalized so `a0 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn run(&self, x: &mut [Complex64]) {
        let (mut x1, mut x2) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let (mut y1, mut y2) = (x1, x2);
        for v in x.iter_mut() {
            let x0 = *v;
            let y0 = x0 * self.b[0] + x1 * self.b[1] + x2 * self.b[2] - y1 * self.a[0] - y2 * self.a[1];
            x2 = x1;
            x1 = x0;
            y2 = y1;
            y1 = y0;
            *v = y0;
        }
    }
}

/// Butterworth low-pass of even `order` as cascaded biquads (bilinear
/// transform with prewarping).
pub fn butterworth_lowpass(order: usize, cutoff: f64, fs: f64) -> Vec<Biquad> {
    assert!(order % 2 == 0 && order > 0, "even order required");
    let w0 = 2.0 * PI * cutoff / fs;
    let (sw, cw) = w0.sin_cos();
    (0..order / 2)
        .map(|k| {
            let theta = PI * (2 * k + 1) as f64 / (2 * order) as f64;
            let q = 1.0 / (2.0 * theta.cos());
            let alpha = sw / (2.0 * q);
            let a0 = 1.0 + alpha;
            let b0 = (1.0 - cw) / 2.0 / a0;
            Biquad {
                b: [b0, 2.0 * b0, b0],
                a: [-2.0 * cw / a0, (1.0 - alpha) / a0],
            }
        })
        .collect()
}

/// Zero-phase filtering: the cascade run forward, then backward.
pub fn filtfilt(sections: &[Biquad], x: &mut [Complex64]) {
    for s in sections {
        s.run(x);
    }
    x.reverse();
    for s in sections {
        s.run(x);
    }
    x.reverse();
}

/// Reusable demodulator for traces of a fixed sampling rate.
#[derive(Debug, Clone)]
pub struct Demodulator {
    f0: f64,
    fs: f64,
    sections: Vec<Biquad>,
}

impl Demodulator {
    pub fn new(f0: f64, fs: f64) -> Self {
        assert!(fs > 2.0 * f0, "sampling rate must exceed twice the carrier");
        Self {
            f0,
            fs,
            sections: butterworth_lowpass(LOWPASS_ORDER, f0, fs),
        }
    }

    /// Writes the complex envelope of `rf` into `out` (same length).
    pub fn run(&self, rf: &[f64], out: &mut [Complex64]) {
        let w = -2.0 * PI * self.f0 / self.fs;
        for (n, (o, &x)) in out.iter_mut().zip(rf).enumerate() {
            *o = Complex64::from_polar(2.0 * x, w * n as f64);
        }
        filtfilt(&self.sections, out);
    }
}

/// Complex envelope of a real RF trace, referenced to `f0`: mix down by
/// `exp(-i 2 pi f0 t)`, double, and low-pass at `f0` with zero phase. A
/// carrier `A cos(2 pi f0 t + phi)` maps to `A exp(i phi)`.
pub fn to_baseband(rf: &[f64], f0: f64, fs: f64) -> Vec<Complex64> {
    let mut out = alloc::vec![Complex64::new(0.0, 0.0); rf.len()];
    Demodulator::new(f0, fs).run(rf, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const F0: f64 = 8e6;
    const FS: f64 = 100e6;

    fn tone(f: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * f * i as f64 / FS).cos()).collect()
    }

    #[test]
    fn lowpass_has_unit_dc_gain_and_half_power_at_cutoff() {
        let s = butterworth_lowpass(6, F0, FS);
        let gain = |f: f64| {
            let z = Complex64::from_polar(1.0, -2.0 * PI * f / FS);
            s.iter().fold(1.0, |g, q| {
                let num = q.b[0] + q.b[1] * z + q.b[2] * z * z;
                let den = 1.0 + q.a[0] * z + q.a[1] * z * z;
                g * (num / den).norm()
            })
        };
        assert!((gain(0.0) - 1.0).abs() < 1e-12);
        assert!((gain(F0) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(gain(2.0 * F0) < 0.02);
    }

    #[test]
    fn carrier_demodulates_to_constant() {
        let bb = to_baseband(&tone(F0, 4000), F0, FS);
        for v in &bb[500..3500] {
            assert!((v.norm() - 1.0).abs() < 0.01, "{}", v.norm());
            assert!(v.arg().abs() < 0.01);
        }
    }

    #[test]
    fn zero_in_zero_out() {
        assert!(to_baseband(&[0.0; 256], F0, FS).iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn offset_tone_rotates_at_offset() {
        let df = 100e3;
        let n = 6000;
        let bb = to_baseband(&tone(F0 + df, n), F0, FS);
        // unwrap phase over the interior and fit the slope
        let (a, b) = (1000, 5000);
        let mut phase = 0.0;
        for i in a..b {
            phase += (bb[i + 1] * bb[i].conj()).arg();
        }
        let rate = phase / (b - a) as f64 * FS / (2.0 * PI);
        assert!((rate - df).abs() < 0.01 * df, "rate {rate}");
    }
}
