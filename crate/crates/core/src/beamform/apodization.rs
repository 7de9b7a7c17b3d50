use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::params::{Apodization, ArrayGeometry};

/// Receive weights over a contiguous run of elements.
///
/// Elements within `half_width` of `center` are active; the run is clipped to
/// the physical array. Weights are in `[0, 1]` and not normalized, a Hanning
/// window over `n` elements sums to about `n / 2`. Beamformers divide by
/// [`ApodizationWindow::sum`] so clipped apertures keep unit DC gain.
#[derive(Debug, Clone, PartialEq)]
pub struct ApodizationWindow {
    pub kind: Apodization,
    pub center: f64,
    pub half_width: f64,
    start: usize,
    weights: Vec<f64>,
    nominal: usize,
}

impl ApodizationWindow {
    pub fn new(geometry: &ArrayGeometry, center: f64, half_width: f64, kind: Apodization) -> Self {
        let e0 = geometry.element_x()[0];
        let pitch = geometry.pitch();
        let n = geometry.num_elements() as i64;
        // tolerance keeps elements sitting exactly on the edge
        let lo = ((center - half_width - e0) / pitch - 1e-9).ceil() as i64;
        let hi = ((center + half_width - e0) / pitch + 1e-9).floor() as i64;
        let nominal = (hi - lo + 1).max(0) as usize;
        let first = lo.max(0);
        let last = hi.min(n - 1);
        if last < first {
            return Self {
                kind,
                center,
                half_width,
                start: 0,
                weights: Vec::new(),
                nominal,
            };
        }
        let weights = (first..=last)
            .map(|j| {
                let d = geometry.element_x()[j as usize] - center;
                match kind {
                    Apodization::Rectangular => 1.0,
                    Apodization::Hanning => {
                        if half_width > 0.0 {
                            let q = (d / half_width).clamp(-1.0, 1.0);
                            0.5 * (1.0 + (PI * q).cos())
                        } else {
                            1.0
                        }
                    }
                }
            })
            .collect();
        Self {
            kind,
            center,
            half_width,
            start: first as usize,
            weights,
            nominal,
        }
    }

    /// Active elements and their weights.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, w)| (self.start + i, *w))
    }

    pub fn weight(&self, element: usize) -> f64 {
        element
            .checked_sub(self.start)
            .and_then(|i| self.weights.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// Weights for every element of an `n`-element array.
    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (j, w) in self.iter() {
            if j < n {
                out[j] = w;
            }
        }
        out
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Elements actually on the array.
    pub fn active(&self) -> usize {
        self.weights.len()
    }

    /// Elements the aperture would cover on an unbounded array.
    pub fn nominal(&self) -> usize {
        self.nominal
    }

    /// More than half of the nominal aperture falls off the array.
    pub fn is_clipped(&self) -> bool {
        2 * self.active() < self.nominal
    }
}
