//! Delay-and-sum receive beamforming for non-steered plane-wave transmits.
//!
//! Channels are demodulated to complex baseband first ([`demodulate`]); the
//! beamformer interpolates the envelopes at each element's round-trip delay,
//! restores the carrier phase of that delay, and references the sum to the
//! pixel's own two-way time `2 z / c`. The active aperture is `z / F#` wide.
//! Steered receive beams keep the same delay law but slide the aperture
//! center to `x -+ z tan(alpha)`, so the receive direction makes angle
//! `alpha` with the vertical on the left or right.

pub mod apodization;
pub mod baseband;

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

pub use apodization::ApodizationWindow;
pub use baseband::{to_baseband, Demodulator};

use crate::error::{Error, Result};
use crate::grid::{axis, PixelGrid};
use crate::params::{AcquisitionParams, Apodization, ArrayGeometry, SystemConfig};
use crate::rfsynth::ChannelData;

/// Complex envelopes of channel data, `[frame][element][fast time]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasebandData {
    pub frames: usize,
    pub elements: usize,
    pub samples: usize,
    pub data: Vec<Complex64>,
}

impl BasebandData {
    pub fn trace(&self, k: usize, element: usize) -> &[Complex64] {
        let start = (k * self.elements + element) * self.samples;
        &self.data[start..start + self.samples]
    }
}

/// Demodulates every trace of `data` at the transmit center frequency.
pub fn demodulate(data: &ChannelData, acq: &AcquisitionParams) -> BasebandData {
    let demod = Demodulator::new(acq.tx_center_frequency, acq.sampling_frequency);
    let traces = data.frames * data.elements;
    let out = crate::par::map_range(traces, |t| {
        let (k, j) = (t / data.elements, t % data.elements);
        let mut buf = vec![Complex64::new(0.0, 0.0); data.samples];
        demod.run(data.trace(k, j), &mut buf);
        buf
    });
    BasebandData {
        frames: data.frames,
        elements: data.elements,
        samples: data.samples,
        data: out.into_iter().flatten().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Side {
    Left,
    Right,
}

/// Receive steering: aperture shifted to one side by `z tan(alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Steer {
    pub side: Side,
    pub alpha_deg: f64,
}

impl Steer {
    pub fn left(alpha_deg: f64) -> Self {
        Self {
            side: Side::Left,
            alpha_deg,
        }
    }

    pub fn right(alpha_deg: f64) -> Self {
        Self {
            side: Side::Right,
            alpha_deg,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Branch {
    Grid,
    SteeredLeft { alpha_deg: f64 },
    SteeredRight { alpha_deg: f64 },
    DirectionalLine,
}

impl From<Option<Steer>> for Branch {
    fn from(s: Option<Steer>) -> Self {
        match s {
            None => Branch::Grid,
            Some(Steer {
                side: Side::Left,
                alpha_deg,
            }) => Branch::SteeredLeft { alpha_deg },
            Some(Steer {
                side: Side::Right,
                alpha_deg,
            }) => Branch::SteeredRight { alpha_deg },
        }
    }
}

/// Sample positions of a beamformed ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Grid(PixelGrid),
    /// Horizontal lines, one per depth, sampled at `lateral`. Point `i` is
    /// depth `i / lateral.len()`, lateral sample `i % lateral.len()`.
    Lines { depths: Vec<f64>, lateral: Vec<f64> },
}

impl Layout {
    pub fn len(&self) -> usize {
        match self {
            Layout::Grid(g) => g.len(),
            Layout::Lines { depths, lateral } => depths.len() * lateral.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> (f64, f64) {
        match self {
            Layout::Grid(g) => g.pixel(i),
            Layout::Lines { depths, lateral } => {
                let n = lateral.len();
                (lateral[i % n], depths[i / n])
            }
        }
    }
}

/// Beamformed complex baseband samples, `[frame][point]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformedEnsemble {
    pub frames: usize,
    pub layout: Layout,
    pub branch: Branch,
    pub values: Vec<Complex64>,
    /// Points whose aperture lost more than half its elements to the array edge.
    pub clipped: usize,
}

impl BeamformedEnsemble {
    pub fn points(&self) -> usize {
        self.layout.len()
    }

    pub fn frame(&self, k: usize) -> &[Complex64] {
        let n = self.points();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn slow_time(&self, point: usize) -> Vec<Complex64> {
        let n = self.points();
        (0..self.frames).map(|k| self.values[k * n + point]).collect()
    }

    /// Samples of line `depth_index` in frame `k` (line layouts only).
    pub fn line(&self, k: usize, depth_index: usize) -> &[Complex64] {
        match &self.layout {
            Layout::Lines { lateral, .. } => {
                let n = lateral.len();
                let f = self.frame(k);
                &f[depth_index * n..(depth_index + 1) * n]
            }
            Layout::Grid(g) => {
                let n = g.nx();
                let f = self.frame(k);
                &f[depth_index * n..(depth_index + 1) * n]
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// One beamformed value and whether its aperture was clipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DasSample {
    pub value: Complex64,
    pub clipped: bool,
}

struct Tap {
    element: usize,
    index: usize,
    frac: f64,
    coef: Complex64,
}

/// Delay-and-sum beamformer bound to one array and acquisition.
#[derive(Debug, Clone, Copy)]
pub struct Beamformer<'a> {
    pub geometry: &'a ArrayGeometry,
    pub acquisition: &'a AcquisitionParams,
    pub f_number: f64,
    pub apodization: Apodization,
}

impl<'a> Beamformer<'a> {
    pub fn new(cfg: &'a SystemConfig) -> Self {
        Self {
            geometry: &cfg.geometry,
            acquisition: &cfg.acquisition,
            f_number: cfg.beamform.f_number,
            apodization: cfg.beamform.apodization,
        }
    }

    /// Receive aperture for a pixel at depth `z` and lateral position `x`.
    pub fn aperture(&self, x: f64, z: f64, steer: Option<Steer>) -> ApodizationWindow {
        let center = match steer {
            None => x,
            Some(s) => {
                let shift = z * s.alpha_deg.to_radians().tan();
                match s.side {
                    Side::Left => x - shift,
                    Side::Right => x + shift,
                }
            }
        };
        let half_width = z / (2.0 * self.f_number);
        ApodizationWindow::new(self.geometry, center, half_width, self.apodization)
    }

    fn taps(&self, x: f64, z: f64, steer: Option<Steer>, samples: usize) -> (Vec<Tap>, bool) {
        let acq = self.acquisition;
        let c = acq.sound_speed;
        let fs = acq.sampling_frequency;
        let w0 = 2.0 * PI * acq.tx_center_frequency;
        let reference = 2.0 * z / c;
        let window = self.aperture(x, z, steer);
        let norm = window.sum();
        if !(norm > 0.0) {
            return (Vec::new(), window.is_clipped());
        }
        let mut taps = Vec::with_capacity(window.active());
        for (j, w) in window.iter() {
            if w <= 0.0 {
                continue;
            }
            let dx = x - self.geometry.element_x()[j];
            let tau = (z + (dx * dx + z * z).sqrt()) / c;
            let s = tau * fs;
            let index = s.floor();
            if index < 0.0 || index as usize + 1 >= samples {
                continue;
            }
            taps.push(Tap {
                element: j,
                index: index as usize,
                frac: s - index,
                coef: Complex64::from_polar(w / norm, w0 * (tau - reference)),
            });
        }
        (taps, window.is_clipped())
    }

    fn sum_taps(taps: &[Tap], data: &BasebandData, k: usize) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in taps {
            let tr = data.trace(k, t.element);
            let v = tr[t.index] * (1.0 - t.frac) + tr[t.index + 1] * t.frac;
            acc += t.coef * v;
        }
        acc
    }

    /// Beamforms one pixel of frame `k`.
    pub fn das_pixel(&self, data: &BasebandData, k: usize, pixel: (f64, f64), steer: Option<Steer>) -> DasSample {
        let (taps, clipped) = self.taps(pixel.0, pixel.1, steer, data.samples);
        DasSample {
            value: Self::sum_taps(&taps, data, k),
            clipped,
        }
    }

    fn beamform_points(&self, data: &BasebandData, layout: Layout, branch: Branch, steer: Option<Steer>) -> BeamformedEnsemble {
        let n = layout.len();
        let frames = data.frames;
        let per_point = crate::par::map_range(n, |i| {
            let (x, z) = layout.point(i);
            let (taps, clipped) = self.taps(x, z, steer, data.samples);
            let series: Vec<Complex64> = (0..frames).map(|k| Self::sum_taps(&taps, data, k)).collect();
            (series, clipped)
        });
        let mut values = vec![Complex64::new(0.0, 0.0); n * frames];
        let mut clipped = 0;
        for (i, (series, c)) in per_point.into_iter().enumerate() {
            clipped += c as usize;
            for (k, v) in series.into_iter().enumerate() {
                values[k * n + i] = v;
            }
        }
        BeamformedEnsemble {
            frames,
            layout,
            branch,
            values,
            clipped,
        }
    }

    /// All frames over a pixel grid, optionally with a steered receive.
    pub fn beamform_grid(&self, data: &BasebandData, grid: &PixelGrid, steer: Option<Steer>) -> BeamformedEnsemble {
        self.beamform_points(data, Layout::Grid(grid.clone()), steer.into(), steer)
    }

    /// Unsteered horizontal lines at each depth, sampled every `spacing`
    /// from `x_start` to `x_end`.
    pub fn directional_lines(
        &self,
        data: &BasebandData,
        depths: &[f64],
        x_start: f64,
        x_end: f64,
        spacing: f64,
    ) -> Result<BeamformedEnsemble> {
        if !(spacing > 0.0) {
            return Err(Error::domain("line spacing", "positive", spacing));
        }
        let layout = Layout::Lines {
            depths: depths.to_vec(),
            lateral: axis(x_start, x_end, spacing),
        };
        Ok(self.beamform_points(data, layout, Branch::DirectionalLine, None))
    }
}
