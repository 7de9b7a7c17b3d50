//! Transducer, acquisition, beamforming and fusion parameters.
//!
//! All lengths are meters, frequencies Hz, speeds m/s. Validation errors name
//! the configuration-file key of the offending value.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Linear array laid out along x, centered on x = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    pitch: f64,
    kerf: f64,
    element_height: f64,
    element_x: Vec<f64>,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, pitch: f64, kerf: f64, element_height: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(Error::validation("num_elements", "need at least 2 elements"));
        }
        if !(kerf > 0.0) {
            return Err(Error::validation("kerf_m", format!("must be positive, got {kerf}")));
        }
        if !(pitch > kerf) || !pitch.is_finite() {
            return Err(Error::validation(
                "pitch_m",
                format!("must exceed the kerf ({kerf}), got {pitch}"),
            ));
        }
        if !(element_height > 0.0) {
            return Err(Error::validation(
                "element_height_m",
                format!("must be positive, got {element_height}"),
            ));
        }
        let mid = (num_elements - 1) as f64 / 2.0;
        let element_x = (0..num_elements).map(|j| (j as f64 - mid) * pitch).collect();
        Ok(Self {
            num_elements,
            pitch,
            kerf,
            element_height,
            element_x,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn kerf(&self) -> f64 {
        self.kerf
    }

    /// Elevation height. Kept for completeness; the model is 2-D.
    pub fn element_height(&self) -> f64 {
        self.element_height
    }

    /// Lateral element centers, strictly increasing, symmetric about 0.
    pub fn element_x(&self) -> &[f64] {
        &self.element_x
    }

    /// Lateral extent covered by element centers.
    pub fn span(&self) -> (f64, f64) {
        (self.element_x[0], self.element_x[self.num_elements - 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionParams {
    pub tx_center_frequency: f64,
    pub sound_speed: f64,
    pub sampling_frequency: f64,
    pub prf: f64,
    pub frames_per_ensemble: usize,
    pub ensembles: usize,
}

impl AcquisitionParams {
    pub fn wavelength(&self) -> f64 {
        self.sound_speed / self.tx_center_frequency
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tx_center_frequency > 0.0) {
            return Err(Error::validation("tx_center_frequency_hz", "must be positive"));
        }
        if !(self.sound_speed > 0.0) {
            return Err(Error::validation("sound_speed_mps", "must be positive"));
        }
        if !(self.sampling_frequency >= 4.0 * self.tx_center_frequency) {
            return Err(Error::validation(
                "sampling_frequency_hz",
                format!(
                    "must be at least 4x the center frequency ({} Hz), got {}",
                    4.0 * self.tx_center_frequency,
                    self.sampling_frequency
                ),
            ));
        }
        if !(self.prf > 0.0) || !self.prf.is_finite() {
            return Err(Error::validation("prf_hz", format!("must be positive, got {}", self.prf)));
        }
        if self.frames_per_ensemble < 2 {
            return Err(Error::validation("frames_per_ensemble", "need at least 2 frames"));
        }
        if self.ensembles < 1 {
            return Err(Error::validation("ensembles", "need at least 1 ensemble"));
        }
        Ok(())
    }
}

/// Receive apodization window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Apodization {
    Hanning,
    Rectangular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformConfig {
    pub f_number: f64,
    pub apodization: Apodization,
    /// Receive steering angles in degrees, strictly increasing, each in (0, 45).
    pub rx_angles_deg: Vec<f64>,
    pub grid_dx: f64,
    pub grid_dz: f64,
    pub directional_line_spacing: f64,
}

impl BeamformConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_number > 0.0) || !self.f_number.is_finite() {
            return Err(Error::validation("f_number", format!("must be positive, got {}", self.f_number)));
        }
        if self.rx_angles_deg.is_empty() {
            return Err(Error::validation("rx_angles_deg", "needs at least one angle"));
        }
        for &a in &self.rx_angles_deg {
            if !(a > 0.0 && a < 45.0) {
                return Err(Error::validation(
                    "rx_angles_deg",
                    format!("every angle must lie in (0, 45) degrees, got {a}"),
                ));
            }
        }
        if self.rx_angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("rx_angles_deg", "angles must be strictly increasing"));
        }
        for (key, v) in [
            ("grid_dx_m", self.grid_dx),
            ("grid_dz_m", self.grid_dz),
            ("directional_line_spacing_m", self.directional_line_spacing),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(key, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionConfig {
    pub min_aperture_elements: usize,
    /// Gate depth. Pixels at or below it use triangulation.
    pub limiting_depth: f64,
    /// True when `limiting_depth` was given explicitly instead of derived.
    pub overridden: bool,
}

impl FusionConfig {
    /// Limiting depth from the F-number and a `min_aperture_elements` wide aperture.
    pub fn derived(f_number: f64, min_aperture_elements: usize, pitch: f64) -> Result<Self> {
        if min_aperture_elements == 0 {
            return Err(Error::validation("min_aperture_elements", "must be positive"));
        }
        let limiting_depth = limiting_depth(f_number, min_aperture_elements as f64 * pitch)?;
        Ok(Self {
            min_aperture_elements,
            limiting_depth,
            overridden: false,
        })
    }

    pub fn with_override(min_aperture_elements: usize, limiting_depth: f64) -> Result<Self> {
        if min_aperture_elements == 0 {
            return Err(Error::validation("min_aperture_elements", "must be positive"));
        }
        if !(limiting_depth > 0.0) || !limiting_depth.is_finite() {
            return Err(Error::validation(
                "limiting_depth_m",
                format!("must be positive, got {limiting_depth}"),
            ));
        }
        Ok(Self {
            min_aperture_elements,
            limiting_depth,
            overridden: true,
        })
    }
}

/// Fusion gate depth: F-number times receive aperture size.
pub fn limiting_depth(f_number: f64, aperture_size: f64) -> Result<f64> {
    if !(f_number > 0.0) {
        return Err(Error::domain("f_number", "positive", f_number));
    }
    if !(aperture_size > 0.0) {
        return Err(Error::domain("aperture size", "positive", aperture_size));
    }
    Ok(f_number * aperture_size)
}

/// Everything a run needs besides the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub geometry: ArrayGeometry,
    pub acquisition: AcquisitionParams,
    pub beamform: BeamformConfig,
    pub fusion: FusionConfig,
}

impl SystemConfig {
    /// Assembles and validates a configuration. The limiting depth is derived
    /// unless `limiting_depth` is given.
    pub fn new(
        geometry: ArrayGeometry,
        acquisition: AcquisitionParams,
        beamform: BeamformConfig,
        min_aperture_elements: usize,
        limiting_depth: Option<f64>,
    ) -> Result<Self> {
        acquisition.validate()?;
        beamform.validate()?;
        let fusion = match limiting_depth {
            Some(z) => FusionConfig::with_override(min_aperture_elements, z)?,
            None => FusionConfig::derived(beamform.f_number, min_aperture_elements, geometry.pitch())?,
        };
        Ok(Self {
            geometry,
            acquisition,
            beamform,
            fusion,
        })
    }

    /// 128-element 8 MHz linear array at 15.6 kHz PRF, 16-frame ensembles,
    /// F/2 Hanning receive, steering at 6/9/12/15 degrees.
    pub fn paper() -> Self {
        let geometry = ArrayGeometry::new(128, 0.1925e-3, 0.01e-3, 5e-3).expect("valid preset");
        let acquisition = AcquisitionParams {
            tx_center_frequency: 8e6,
            sound_speed: 1540.0,
            sampling_frequency: 100e6,
            prf: 15.6e3,
            frames_per_ensemble: 16,
            ensembles: 10,
        };
        let spacing = acquisition.wavelength() / 10.0;
        let beamform = BeamformConfig {
            f_number: 2.0,
            apodization: Apodization::Hanning,
            rx_angles_deg: alloc::vec![6.0, 9.0, 12.0, 15.0],
            grid_dx: 0.1e-3,
            grid_dz: 0.1e-3,
            directional_line_spacing: spacing,
        };
        Self::new(geometry, acquisition, beamform, 30, None).expect("valid preset")
    }

    /// Laptop-scale variant of [`SystemConfig::paper`]: two ensembles on a
    /// coarser pixel grid. The array is unchanged because the steered
    /// apertures at 20+ mm need the full 128 elements.
    pub fn desk() -> Self {
        let mut cfg = Self::paper();
        cfg.acquisition.ensembles = 2;
        cfg.beamform.grid_dx = 0.2e-3;
        cfg.beamform.grid_dz = 0.2e-3;
        cfg
    }

    pub fn limiting_depth(&self) -> f64 {
        self.fusion.limiting_depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_positions_are_centered_and_uniform() {
        let g = ArrayGeometry::new(128, 0.1925e-3, 0.01e-3, 5e-3).unwrap();
        let x = g.element_x();
        assert_eq!(x.len(), 128);
        let mean: f64 = x.iter().sum::<f64>() / x.len() as f64;
        assert!(mean.abs() < 1e-12);
        for w in x.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] - w[0] - 0.1925e-3).abs() < 1e-12);
        }
        assert_eq!(x[0], -x[127]);
    }

    #[test]
    fn geometry_rejects_bad_values() {
        assert!(matches!(
            ArrayGeometry::new(1, 1e-3, 1e-5, 1e-3),
            Err(Error::Validation { key: "num_elements", .. })
        ));
        assert!(matches!(
            ArrayGeometry::new(8, 1e-5, 1e-5, 1e-3),
            Err(Error::Validation { key: "pitch_m", .. })
        ));
        assert!(matches!(
            ArrayGeometry::new(8, 1e-3, 0.0, 1e-3),
            Err(Error::Validation { key: "kerf_m", .. })
        ));
    }

    #[test]
    fn paper_preset_wavelength() {
        let cfg = SystemConfig::paper();
        assert!((cfg.acquisition.wavelength() - 0.1925e-3).abs() < 1e-15);
        assert_eq!(cfg.acquisition.frames_per_ensemble, 16);
        assert_eq!(cfg.geometry.num_elements(), 128);
    }

    #[test]
    fn derived_limiting_depth_uses_thirty_element_span() {
        let cfg = SystemConfig::paper();
        assert!(!cfg.fusion.overridden);
        assert!((cfg.limiting_depth() - 2.0 * 30.0 * 0.1925e-3).abs() < 1e-12);
    }

    #[test]
    fn limiting_depth_examples() {
        // 30 elements of a 0.3 mm pitch probe at F/1.71
        let z = limiting_depth(1.71, 30.0 * 0.3e-3).unwrap();
        assert!((z - 0.01539).abs() < 1e-12);
        assert!((z * 1e3 * 10.0).round() / 10.0 == 15.4);
        let z = limiting_depth(2.0, 0.005775).unwrap();
        assert!((z - 0.01155).abs() < 1e-12);
        for x in [1e-4, 3e-3, 0.02] {
            assert_eq!(limiting_depth(1.0, x).unwrap(), x);
        }
    }

    #[test]
    fn limiting_depth_rejects_non_positive() {
        assert!(limiting_depth(0.0, 1e-3).is_err());
        assert!(limiting_depth(2.0, -1e-3).is_err());
        assert!(limiting_depth(f64::NAN, 1e-3).is_err());
    }

    #[test]
    fn acquisition_validation_names_key() {
        let mut acq = SystemConfig::paper().acquisition;
        acq.prf = 0.0;
        assert!(matches!(acq.validate(), Err(Error::Validation { key: "prf_hz", .. })));
        let mut acq = SystemConfig::paper().acquisition;
        acq.sampling_frequency = 20e6;
        assert!(matches!(
            acq.validate(),
            Err(Error::Validation { key: "sampling_frequency_hz", .. })
        ));
        let mut acq = SystemConfig::paper().acquisition;
        acq.frames_per_ensemble = 1;
        assert!(matches!(
            acq.validate(),
            Err(Error::Validation { key: "frames_per_ensemble", .. })
        ));
    }

    #[test]
    fn beamform_validation() {
        let mut bf = SystemConfig::paper().beamform;
        bf.rx_angles_deg = alloc::vec![9.0, 6.0];
        assert!(matches!(bf.validate(), Err(Error::Validation { key: "rx_angles_deg", .. })));
        bf.rx_angles_deg = alloc::vec![45.0];
        assert!(bf.validate().is_err());
        bf.rx_angles_deg = alloc::vec![];
        assert!(bf.validate().is_err());
        let mut bf = SystemConfig::paper().beamform;
        bf.f_number = 0.0;
        assert!(matches!(bf.validate(), Err(Error::Validation { key: "f_number", .. })));
    }

    #[test]
    fn override_is_kept() {
        let p = SystemConfig::paper();
        let cfg = SystemConfig::new(p.geometry, p.acquisition, p.beamform, 30, Some(0.015)).unwrap();
        assert!(cfg.fusion.overridden);
        assert_eq!(cfg.limiting_depth(), 0.015);
    }
}
