//! Depth gate between the two estimators, and bias/std evaluation against
//! ground truth.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
pub use crate::grid::{Method, PixelGrid, VelocityField};
use crate::estimators::DepthEstimate;

fn same_depth(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-3)
}

/// Rows shallower than `z_limit` take the per-depth directional estimate;
/// rows at or below it take the triangulation field. No blending.
///
/// `deep` defines the grid. Pixels it leaves untagged are treated as not
/// computed; a row needing them, or a shallow row without a matching
/// directional depth, is a coverage error.
pub fn fuse(shallow: &[DepthEstimate], deep: &VelocityField, z_limit: f64) -> Result<VelocityField> {
    let grid = &deep.grid;
    let nx = grid.nx();
    let mut out = VelocityField::empty(grid.clone());
    for (iz, &z) in grid.z.iter().enumerate() {
        if z < z_limit {
            let row = shallow
                .iter()
                .find(|d| same_depth(d.depth, z))
                .ok_or(Error::Coverage { depth_m: z })?;
            for ix in 0..nx {
                let i = grid.index(iz, ix);
                out.method[i] = Some(Method::DirectionalXCorr);
                out.quality[i] = row.quality;
                if let Some(e) = row.estimate {
                    out.set(i, e.vx, e.vz, Method::DirectionalXCorr, e.quality);
                }
            }
        } else {
            for ix in 0..nx {
                let i = grid.index(iz, ix);
                if deep.method[i].is_none() {
                    return Err(Error::Coverage { depth_m: z });
                }
                out.method[i] = Some(Method::Triangulation);
                out.quality[i] = deep.quality[i];
                if deep.valid[i] {
                    out.set(i, deep.vx[i], deep.vz[i], Method::Triangulation, deep.quality[i]);
                }
            }
        }
    }
    Ok(out)
}

/// Per-pixel directional field: every pixel of a row gets that depth's estimate.
pub fn directional_field(grid: &PixelGrid, shallow: &[DepthEstimate]) -> Result<VelocityField> {
    let deep = VelocityField::empty(grid.clone());
    fuse(shallow, &deep, f64::INFINITY)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VesselMetrics {
    pub vessel: usize,
    pub bias_pct: f64,
    pub std_pct: f64,
    pub n_valid: usize,
}

/// Bias and spread as percentages of the peak velocity.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProfileMetrics {
    pub mean_bias_pct: f64,
    pub std_pct: f64,
    pub n_valid: usize,
    /// In-vessel pixels excluded because some ensemble left them invalid.
    pub n_invalid: usize,
    pub per_vessel: Vec<VesselMetrics>,
}

struct PixelStats {
    bias: f64,
    spread: f64,
}

fn pixel_stats(estimates: &[VelocityField], truth: &VelocityField, i: usize) -> PixelStats {
    let n = estimates.len() as f64;
    let mx = estimates.iter().map(|e| e.vx[i]).sum::<f64>() / n;
    let mz = estimates.iter().map(|e| e.vz[i]).sum::<f64>() / n;
    let bias = (mx - truth.vx[i]).hypot(mz - truth.vz[i]);
    let spread = if estimates.len() < 2 {
        0.0
    } else {
        let ss: f64 = estimates
            .iter()
            .map(|e| (e.vx[i] - mx).powi(2) + (e.vz[i] - mz).powi(2))
            .sum();
        (ss / (n - 1.0)).sqrt()
    };
    PixelStats { bias, spread }
}

fn check_grids(estimates: &[VelocityField], truth: &VelocityField) -> Result<()> {
    if estimates.is_empty() {
        return Err(Error::GridMismatch("no estimated fields".into()));
    }
    for (k, e) in estimates.iter().enumerate() {
        if e.grid != truth.grid {
            return Err(Error::GridMismatch(format!("ensemble {k} grid differs from the truth grid")));
        }
    }
    Ok(())
}

/// Bias of the ensemble-mean velocity and across-ensemble spread, averaged
/// over in-vessel pixels valid in every ensemble.
///
/// Bias is the magnitude of the vector error `|mean(v_est) - v_true|`.
/// Spread is the sample standard deviation of the estimate vectors about
/// their mean (zero for a single ensemble). Both are divided by `v_peak`.
pub fn evaluate(estimates: &[VelocityField], truth: &VelocityField, v_peak: f64) -> Result<ProfileMetrics> {
    if !(v_peak > 0.0) {
        return Err(Error::domain("peak velocity", "positive", v_peak));
    }
    check_grids(estimates, truth)?;
    let vessels = truth.vessel.iter().flatten().max().map_or(0, |m| m + 1);
    let mut acc = vec![(0.0, 0.0, 0usize); vessels];
    let mut n_invalid = 0;
    for i in 0..truth.len() {
        let Some(id) = truth.vessel[i] else { continue };
        if !estimates.iter().all(|e| e.valid[i]) {
            n_invalid += 1;
            continue;
        }
        let s = pixel_stats(estimates, truth, i);
        acc[id].0 += s.bias;
        acc[id].1 += s.spread;
        acc[id].2 += 1;
    }
    let n_valid: usize = acc.iter().map(|a| a.2).sum();
    if n_valid == 0 {
        return Err(Error::NoValidPixels);
    }
    let pct = |x: f64, n: usize| 100.0 * x / n as f64 / v_peak;
    let per_vessel = acc
        .iter()
        .enumerate()
        .filter(|(_, a)| a.2 > 0)
        .map(|(vessel, a)| VesselMetrics {
            vessel,
            bias_pct: pct(a.0, a.2),
            std_pct: pct(a.1, a.2),
            n_valid: a.2,
        })
        .collect();
    let bias: f64 = acc.iter().map(|a| a.0).sum();
    let spread: f64 = acc.iter().map(|a| a.1).sum();
    Ok(ProfileMetrics {
        mean_bias_pct: pct(bias, n_valid),
        std_pct: pct(spread, n_valid),
        n_valid,
        n_invalid,
        per_vessel,
    })
}

/// One depth sample of a velocity-magnitude profile.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProfilePoint {
    pub z_m: f64,
    pub v_true: f64,
    pub v_est_mean: f64,
    pub v_est_std: f64,
}

/// Speed versus depth along the grid column nearest `x`, over in-vessel
/// pixels valid in every ensemble.
pub fn depth_profile(estimates: &[VelocityField], truth: &VelocityField, x: f64) -> Result<Vec<ProfilePoint>> {
    check_grids(estimates, truth)?;
    let grid = &truth.grid;
    let ix = grid
        .x
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::GridMismatch("grid has no columns".into()))?;
    let n = estimates.len() as f64;
    let mut out = Vec::new();
    for (iz, &z) in grid.z.iter().enumerate() {
        let i = grid.index(iz, ix);
        if truth.vessel[i].is_none() || !estimates.iter().all(|e| e.valid[i]) {
            continue;
        }
        let speeds: Vec<f64> = estimates.iter().map(|e| e.speed(i)).collect();
        let mean = speeds.iter().sum::<f64>() / n;
        let std = if speeds.len() < 2 {
            0.0
        } else {
            (speeds.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        out.push(ProfilePoint {
            z_m: z,
            v_true: truth.speed(i),
            v_est_mean: mean,
            v_est_std: std,
        });
    }
    Ok(out)
}
