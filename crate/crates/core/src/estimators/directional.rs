//! Lateral velocity from directional (horizontal) lines.
//!
//! Flow near the surface is taken as transverse, so the lines are
//! horizontal and no angle estimator is involved. Per depth, the
//! correlation curves of all consecutive frame pairs are averaged before
//! the peak is located.

use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::xcorr::{peak_lag, xcorr_curve};
use super::VelocityEstimate;
use crate::beamform::{BeamformedEnsemble, Layout};
use crate::error::{Error, Result};
use crate::grid::Method;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalSettings {
    pub max_lag: usize,
    /// Minimum averaged correlation peak for a valid estimate.
    pub quality_threshold: f64,
    pub v_max: f64,
}

impl DirectionalSettings {
    /// Search range of `1.5 v_max` worth of displacement per emission.
    pub fn new(v_max: f64, prf: f64, spacing: f64, quality_threshold: f64) -> Self {
        Self {
            max_lag: default_max_lag(v_max, prf, spacing),
            quality_threshold,
            v_max,
        }
    }
}

pub fn default_max_lag(v_max: f64, prf: f64, spacing: f64) -> usize {
    (1.5 * v_max / (prf * spacing)).ceil().max(1.0) as usize
}

/// Lateral estimate at one depth. `estimate` is `None` for invalid depths;
/// `quality` is reported either way.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthEstimate {
    pub depth: f64,
    pub estimate: Option<VelocityEstimate>,
    pub quality: f64,
}

/// Per-depth `vx = lag * spacing * prf`, `vz = 0`.
pub fn directional_velocity(
    lines: &BeamformedEnsemble,
    prf: f64,
    spacing: f64,
    settings: &DirectionalSettings,
) -> Result<Vec<DepthEstimate>> {
    let Layout::Lines { depths, .. } = &lines.layout else {
        return Err(Error::Shape("directional estimation needs a line layout".into()));
    };
    if lines.frames < 2 {
        return Err(Error::domain("frame count", "at least 2", lines.frames as f64));
    }
    let max_lag = settings.max_lag;
    let per_depth = crate::par::map_range(depths.len(), |d| -> Result<DepthEstimate> {
        let mut acc: Option<Vec<Complex64>> = None;
        let mut pairs = 0usize;
        for k in 0..lines.frames - 1 {
            match xcorr_curve(lines.line(k, d), lines.line(k + 1, d), max_lag) {
                Ok(curve) => {
                    match acc.as_mut() {
                        None => acc = Some(curve),
                        Some(sum) => sum.iter_mut().zip(&curve).for_each(|(s, c)| *s += c),
                    }
                    pairs += 1;
                }
                Err(Error::FlatSignal) => {}
                Err(e) => return Err(e),
            }
        }
        let invalid = |quality| DepthEstimate {
            depth: depths[d],
            estimate: None,
            quality,
        };
        let Some(mut curve) = acc else {
            return Ok(invalid(0.0));
        };
        curve.iter_mut().for_each(|c| *c /= pairs as f64);
        let peak = peak_lag::<Complex64>(&curve, max_lag);
        let vx = peak.lag * spacing * prf;
        if peak.quality < settings.quality_threshold || vx.abs() > settings.v_max {
            return Ok(invalid(peak.quality));
        }
        Ok(DepthEstimate {
            depth: depths[d],
            estimate: Some(VelocityEstimate {
                vx,
                vz: 0.0,
                method: Method::DirectionalXCorr,
                quality: peak.quality,
            }),
            quality: peak.quality,
        })
    });
    per_depth.into_iter().collect()
}
