//! Rectilinear pixel grid and per-pixel velocity maps.

use alloc::vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Pixels on a lateral (x) by depth (z) lattice. Pixel `i` sits in row
/// `i / nx` (depth) and column `i % nx` (lateral).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PixelGrid {
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

impl PixelGrid {
    /// Samples `[x0, x1]` and `[z0, z1]` at the given pitches, endpoints
    /// included when they fall on the lattice.
    pub fn new(x0: f64, x1: f64, dx: f64, z0: f64, z1: f64, dz: f64) -> Result<Self> {
        if !(dx > 0.0) || !(dz > 0.0) {
            return Err(Error::domain("grid pitch", "positive", if dx > 0.0 { dz } else { dx }));
        }
        Ok(Self {
            x: axis(x0, x1, dx),
            z: axis(z0, z1, dz),
        })
    }

    pub fn from_axes(x: Vec<f64>, z: Vec<f64>) -> Self {
        Self { x, z }
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixel(&self, i: usize) -> (f64, f64) {
        let nx = self.nx();
        (self.x[i % nx], self.z[i / nx])
    }

    pub fn index(&self, iz: usize, ix: usize) -> usize {
        iz * self.nx() + ix
    }
}

/// Evenly spaced samples from `start` to `end` inclusive (up to rounding).
pub fn axis(start: f64, end: f64, step: f64) -> Vec<f64> {
    if end < start {
        return Vec::new();
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + i as f64 * step).collect()
}

/// Which estimator produced a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Method {
    DirectionalXCorr,
    Triangulation,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DirectionalXCorr => "directional_xcorr",
            Method::Triangulation => "triangulation",
        }
    }
}

/// Per-pixel velocity over a [`PixelGrid`].
///
/// Estimated fields tag each pixel with its method; ground-truth fields
/// leave `method` empty and label in-vessel pixels in `vessel` instead.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub grid: PixelGrid,
    pub vx: Vec<f64>,
    pub vz: Vec<f64>,
    pub method: Vec<Option<Method>>,
    pub valid: Vec<bool>,
    pub quality: Vec<f64>,
    pub vessel: Vec<Option<usize>>,
}

impl VelocityField {
    /// All-invalid field, zero velocity.
    pub fn empty(grid: PixelGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            vx: vec![0.0; n],
            vz: vec![0.0; n],
            method: vec![None; n],
            valid: vec![false; n],
            quality: vec![0.0; n],
            vessel: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.vx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vx.is_empty()
    }

    pub fn speed(&self, i: usize) -> f64 {
        num_traits::Float::hypot(self.vx[i], self.vz[i])
    }

    pub fn set(&mut self, i: usize, vx: f64, vz: f64, method: Method, quality: f64) {
        self.vx[i] = vx;
        self.vz[i] = vz;
        self.method[i] = Some(method);
        self.valid[i] = true;
        self.quality[i] = quality;
    }
}
