//! Velocity estimators.
//!
//! * [`kasai`]: lag-one slow-time autocorrelation, mean Doppler frequency
//! * [`triangulation`]: left/right Doppler pairs to (vx, vz), with a
//!   weighted least-squares fit over several steering angles
//! * [`xcorr`]: normalized cross-correlation with parabolic peak refinement
//! * [`directional`]: per-depth lateral velocity from beamformed lines

pub mod directional;
pub mod kasai;
pub mod triangulation;
pub mod xcorr;

pub use directional::{directional_velocity, DepthEstimate, DirectionalSettings};
pub use kasai::{kasai_frequency, KasaiEstimate, LagOne};
pub use triangulation::{forward_frequencies, stdmr_estimate, triangulate, FrequencyPair};
pub use xcorr::{xcorr_lag, LagEstimate};

use crate::grid::Method;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VelocityEstimate {
    pub vx: f64,
    pub vz: f64,
    pub method: Method,
    pub quality: f64,
}

impl VelocityEstimate {
    pub fn speed(&self) -> f64 {
        num_traits::Float::hypot(self.vx, self.vz)
    }
}
