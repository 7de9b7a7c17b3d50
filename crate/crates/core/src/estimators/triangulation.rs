//! Two-angle Doppler triangulation.
//!
//! A plane wave travelling straight down and a receive beam tilted by
//! `alpha` to the left sense the velocity projected on the sum of the two
//! unit vectors. With `f_L` and `f_R` the Doppler shifts of the left and
//! right beams (positive when the two-way path lengthens):
//!
//! ```text
//! vx = (f_L - f_R) / sin(alpha)     * c / (2 f0)
//! vz = (f_L + f_R) / (1 + cos(alpha)) * c / (2 f0)
//! ```

use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::VelocityEstimate;
use crate::error::{Error, Result};
use crate::grid::Method;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyPair {
    pub f_left: f64,
    pub f_right: f64,
    pub alpha_deg: f64,
    pub quality: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < FRAC_PI_2 {
        Ok(())
    } else {
        Err(Error::domain("receive angle", "in (0, pi/2) rad", alpha))
    }
}

/// Velocity components from one left/right pair at angle `alpha` (radians).
pub fn triangulate(f_left: f64, f_right: f64, alpha: f64, c: f64, f0: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let scale = c / (2.0 * f0);
    let vx = (f_left - f_right) / alpha.sin() * scale;
    let vz = (f_left + f_right) / (1.0 + alpha.cos()) * scale;
    Ok((vx, vz))
}

/// Doppler shifts a velocity produces on the left and right beams.
pub fn forward_frequencies(vx: f64, vz: f64, alpha: f64, c: f64, f0: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let k = f0 / c;
    let lateral = vx * alpha.sin() * k;
    let axial = vz * (1.0 + alpha.cos()) * k;
    Ok((axial + lateral, axial - lateral))
}

/// Quality-weighted least-squares fit of (vx, vz) over several angles.
///
/// Differences `f_L - f_R = vx sin(a) 2 f0 / c` and sums
/// `f_L + f_R = vz (1 + cos(a)) 2 f0 / c` decouple, so each component is a
/// one-parameter weighted regression through the origin. Pairs with quality
/// below `threshold` are ignored.
pub fn stdmr_estimate(pairs: &[FrequencyPair], c: f64, f0: f64, threshold: f64) -> Result<VelocityEstimate> {
    let k = 2.0 * f0 / c;
    let mut used: Vec<&FrequencyPair> = Vec::with_capacity(pairs.len());
    for p in pairs {
        check_alpha(p.alpha_deg.to_radians())?;
        if p.quality >= threshold {
            used.push(p);
        }
    }
    if used.is_empty() {
        return Err(Error::InsufficientQuality { threshold });
    }
    let (mut sxx, mut sxy, mut szz, mut szy, mut q) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for p in &used {
        let a = p.alpha_deg.to_radians();
        let w = p.quality.max(f64::MIN_POSITIVE);
        let gx = a.sin() * k;
        let gz = (1.0 + a.cos()) * k;
        sxx += w * gx * gx;
        sxy += w * gx * (p.f_left - p.f_right);
        szz += w * gz * gz;
        szy += w * gz * (p.f_left + p.f_right);
        q += p.quality;
    }
    Ok(VelocityEstimate {
        vx: sxy / sxx,
        vz: szy / szz,
        method: Method::Triangulation,
        quality: q / used.len() as f64,
    })
}
