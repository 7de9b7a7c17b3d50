//! Depth-gated vector flow imaging for ultrafast plane-wave ultrasound.
//!
//! Shallow pixels are estimated by cross-correlating laterally beamformed
//! lines between emissions (flow is assumed transverse there). Deeper pixels
//! are estimated by triangulating Kasai Doppler shifts measured on receive
//! beams steered left and right at several angles. The switch happens at a
//! limiting depth equal to the F-number times a minimum receive aperture.
//!
//! The crate is `no_std` (with `alloc`) when built without default features.
//! Enable `parallel` to spread per-pixel work over a rayon pool.
//!
//! Pipeline stages, in order:
//!
//! * [`phantom`]: point scatterers in vessels with parabolic flow, plus ground truth
//! * [`rfsynth`]: linear pulse-echo channel data for non-steered plane-wave transmits
//! * [`beamform`]: IQ demodulation and delay-and-sum onto grids, steered beams and lateral lines
//! * [`clutter`]: truncated-SVD slow-time filter
//! * [`estimators`]: Kasai autocorrelation, triangulation and lateral cross-correlation
//! * [`fusion`]: depth gate and bias/std evaluation
//! * [`pipeline`]: end-to-end runs over several ensembles

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod beamform;
pub mod clutter;
pub mod error;
pub mod estimators;
pub mod fusion;
pub mod grid;
pub mod params;
pub mod phantom;
pub mod pipeline;
pub mod rfsynth;

mod par;

pub use error::{Error, Result, Stage};
pub use num_complex::Complex64;
