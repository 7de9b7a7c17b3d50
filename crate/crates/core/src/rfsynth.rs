//! Linear pulse-echo synthesis of plane-wave channel data.
//!
//! Each point scatterer returns a Gaussian-enveloped cosine delayed by the
//! plane-wave transmit path (its depth) plus the receive path to each
//! element. There is no element directivity, attenuation or multiple
//! scattering, so every echo is known in closed form.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::params::{AcquisitionParams, ArrayGeometry};
use crate::phantom::{advance_scatterers, ScattererField, VesselSpec};

/// Envelope truncation, in standard deviations.
const SUPPORT_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PulseSpec {
    pub center_frequency: f64,
    /// -6 dB bandwidth over center frequency.
    pub fractional_bandwidth: f64,
}

impl PulseSpec {
    pub fn new(center_frequency: f64, fractional_bandwidth: f64) -> Result<Self> {
        if !(fractional_bandwidth > 0.0 && fractional_bandwidth < 2.0) {
            return Err(Error::domain("fractional bandwidth", "in (0, 2)", fractional_bandwidth));
        }
        if !(center_frequency > 0.0) {
            return Err(Error::domain("pulse center frequency", "positive", center_frequency));
        }
        Ok(Self {
            center_frequency,
            fractional_bandwidth,
        })
    }

    /// Envelope standard deviation in seconds. A Gaussian envelope
    /// `exp(-t^2 / 2 s^2)` has spectrum `exp(-2 pi^2 s^2 f^2)`, which is down
    /// 6 dB at `f = B / 2` when `s = sqrt(2 ln 2) / (pi B)`.
    pub fn sigma(&self) -> f64 {
        (2.0 * LN_2).sqrt() / (PI * self.fractional_bandwidth * self.center_frequency)
    }

    /// Pulse value at time offset `tau` from its peak.
    pub fn eval(&self, tau: f64) -> f64 {
        let s = self.sigma();
        (-tau * tau / (2.0 * s * s)).exp() * (2.0 * PI * self.center_frequency * tau).cos()
    }

    pub fn half_support(&self) -> f64 {
        SUPPORT_SIGMAS * self.sigma()
    }
}

/// RF samples laid out `[frame][element][fast time]`. Sample 0 is the
/// transmit instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelData {
    pub frames: usize,
    pub elements: usize,
    pub samples: usize,
    pub data: Vec<f64>,
}

impl ChannelData {
    pub fn zeros(frames: usize, elements: usize, samples: usize) -> Self {
        Self {
            frames,
            elements,
            samples,
            data: vec![0.0; frames * elements * samples],
        }
    }

    pub fn from_frames(elements: usize, samples: usize, frames: Vec<Vec<f64>>) -> Result<Self> {
        let n = frames.len();
        let mut data = Vec::with_capacity(n * elements * samples);
        for f in frames {
            if f.len() != elements * samples {
                return Err(Error::Shape(alloc::format!(
                    "frame has {} samples, expected {}",
                    f.len(),
                    elements * samples
                )));
            }
            data.extend_from_slice(&f);
        }
        Ok(Self {
            frames: n,
            elements,
            samples,
            data,
        })
    }

    pub fn frame(&self, k: usize) -> &[f64] {
        let n = self.elements * self.samples;
        &self.data[k * n..(k + 1) * n]
    }

    pub fn trace(&self, k: usize, element: usize) -> &[f64] {
        let start = (k * self.elements + element) * self.samples;
        &self.data[start..start + self.samples]
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Fast-time samples needed to image down to `z_max` with 20% margin.
pub fn sample_window(z_max: f64, acq: &AcquisitionParams) -> usize {
    (acq.sampling_frequency * 2.0 * z_max * 1.2 / acq.sound_speed).ceil() as usize
}

/// One frame of channel data, `[element][fast time]`, with `samples` per trace.
pub fn synthesize_frame(
    field: &ScattererField,
    geometry: &ArrayGeometry,
    acq: &AcquisitionParams,
    pulse: &PulseSpec,
    samples: usize,
) -> Result<Vec<f64>> {
    let fs = acq.sampling_frequency;
    let c = acq.sound_speed;
    let window = samples as f64 / fs;
    for &(_, z) in &field.positions {
        if !(z > 0.0) {
            return Err(Error::domain("scatterer depth", "positive", z));
        }
    }

    let sigma = pulse.sigma();
    let half = pulse.half_support();
    let dt = 1.0 / fs;
    let omega = 2.0 * PI * pulse.center_frequency;
    let env_step2 = (-dt * dt / (sigma * sigma)).exp();
    let (step_sin, step_cos) = (omega * dt).sin_cos();
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);

    let traces = crate::par::map_range(geometry.num_elements(), |j| -> Result<Vec<f64>> {
        let e = geometry.element_x()[j];
        let mut trace = vec![0.0; samples];
        for (&(x, z), &a) in field.positions.iter().zip(&field.amplitudes) {
            let dx = x - e;
            let t = (z + (dx * dx + z * z).sqrt()) / c;
            if t * fs > (samples as f64 - 1.0) {
                return Err(Error::DepthRange {
                    time_s: t,
                    window_s: window,
                });
            }
            let n0 = ((t - half) * fs).ceil().max(0.0) as usize;
            let n1 = (((t + half) * fs).floor() as usize).min(samples - 1);
            if n1 < n0 {
                continue;
            }
            // Envelope and carrier advanced by recurrence from the first sample.
            let tau0 = n0 as f64 * dt - t;
            let mut env = a * (-tau0 * tau0 * inv_two_var).exp();
            let mut ratio = (-(2.0 * tau0 * dt + dt * dt) * inv_two_var).exp();
            let (mut s, mut co) = (omega * tau0).sin_cos();
            for v in &mut trace[n0..=n1] {
                *v += env * co;
                env *= ratio;
                ratio *= env_step2;
                let next = co * step_cos - s * step_sin;
                s = s * step_cos + co * step_sin;
                co = next;
            }
        }
        Ok(trace)
    });

    let mut frame = Vec::with_capacity(geometry.num_elements() * samples);
    for t in traces {
        frame.extend_from_slice(&t?);
    }
    Ok(frame)
}

/// `frames` consecutive emissions at the PRF, starting from `field`.
pub fn synthesize_ensemble(
    field: &ScattererField,
    vessels: &[VesselSpec],
    geometry: &ArrayGeometry,
    acq: &AcquisitionParams,
    pulse: &PulseSpec,
    samples: usize,
) -> Result<ChannelData> {
    let k = acq.frames_per_ensemble;
    if k < 2 {
        return Err(Error::validation("frames_per_ensemble", "need at least 2 frames"));
    }
    let dt = 1.0 / acq.prf;
    let mut current = field.clone();
    let mut frames = Vec::with_capacity(k);
    for i in 0..k {
        if i > 0 {
            current = advance_scatterers(&current, vessels, dt)?;
        }
        frames.push(synthesize_frame(&current, geometry, acq, pulse, samples)?);
    }
    ChannelData::from_frames(geometry.num_elements(), samples, frames)
}

/// Adds white Gaussian noise at `snr_db` below the mean power of the
/// nonzero samples. An infinite SNR returns the data unchanged.
pub fn add_noise(data: &ChannelData, snr_db: f64, rng_seed: u64) -> Result<ChannelData> {
    if data.is_empty() {
        return Err(Error::Shape("cannot add noise to empty channel data".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(data.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::domain("snr", "a number", snr_db));
    }
    let (sum, count) = data
        .data
        .iter()
        .filter(|v| **v != 0.0)
        .fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if count == 0 {
        return Ok(data.clone());
    }
    let signal_power = sum / count as f64;
    let sd = (signal_power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = data.clone();
    for v in &mut out.data {
        let n: f64 = rng.sample(StandardNormal);
        *v += sd * n;
    }
    Ok(out)
}
