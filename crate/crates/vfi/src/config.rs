//! Flat TOML configuration file.
//!
//! Every key is required except `limiting_depth_m`; when it is absent the
//! limiting depth is derived from `f_number * min_aperture_elements * pitch_m`.
//! Unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vfi_core::params::{AcquisitionParams, Apodization, ArrayGeometry, BeamformConfig, SystemConfig};
use vfi_core::pipeline::Scenario;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub num_elements: usize,
    pub pitch_m: f64,
    pub kerf_m: f64,
    pub element_height_m: f64,
    pub tx_center_frequency_hz: f64,
    pub sound_speed_mps: f64,
    pub sampling_frequency_hz: f64,
    pub prf_hz: f64,
    pub frames_per_ensemble: usize,
    pub ensembles: usize,
    pub f_number: f64,
    pub apodization: Apodization,
    pub rx_angles_deg: Vec<f64>,
    pub grid_dx_m: f64,
    pub grid_dz_m: f64,
    pub directional_line_spacing_m: f64,
    pub min_aperture_elements: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limiting_depth_m: Option<f64>,
}

impl ConfigFile {
    pub fn from_system(cfg: &SystemConfig) -> Self {
        let g = &cfg.geometry;
        let a = &cfg.acquisition;
        let b = &cfg.beamform;
        Self {
            num_elements: g.num_elements(),
            pitch_m: g.pitch(),
            kerf_m: g.kerf(),
            element_height_m: g.element_height(),
            tx_center_frequency_hz: a.tx_center_frequency,
            sound_speed_mps: a.sound_speed,
            sampling_frequency_hz: a.sampling_frequency,
            prf_hz: a.prf,
            frames_per_ensemble: a.frames_per_ensemble,
            ensembles: a.ensembles,
            f_number: b.f_number,
            apodization: b.apodization,
            rx_angles_deg: b.rx_angles_deg.clone(),
            grid_dx_m: b.grid_dx,
            grid_dz_m: b.grid_dz,
            directional_line_spacing_m: b.directional_line_spacing,
            min_aperture_elements: cfg.fusion.min_aperture_elements,
            limiting_depth_m: cfg.fusion.overridden.then_some(cfg.fusion.limiting_depth),
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper" => Ok(Self::from_system(&SystemConfig::paper())),
            "desk" => Ok(Self::from_system(&SystemConfig::desk())),
            other => Err(CliError::Usage(format!("unknown preset `{other}` (expected desk or paper)"))),
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::parse(origin, e.message()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file = Self::parse(&text, path)?;
        file.to_system()?;
        Ok(file)
    }

    pub fn to_system(&self) -> Result<SystemConfig> {
        let geometry = ArrayGeometry::new(self.num_elements, self.pitch_m, self.kerf_m, self.element_height_m)?;
        let acquisition = AcquisitionParams {
            tx_center_frequency: self.tx_center_frequency_hz,
            sound_speed: self.sound_speed_mps,
            sampling_frequency: self.sampling_frequency_hz,
            prf: self.prf_hz,
            frames_per_ensemble: self.frames_per_ensemble,
            ensembles: self.ensembles,
        };
        let beamform = BeamformConfig {
            f_number: self.f_number,
            apodization: self.apodization,
            rx_angles_deg: self.rx_angles_deg.clone(),
            grid_dx: self.grid_dx_m,
            grid_dz: self.grid_dz_m,
            directional_line_spacing: self.directional_line_spacing_m,
        };
        Ok(SystemConfig::new(
            geometry,
            acquisition,
            beamform,
            self.min_aperture_elements,
            self.limiting_depth_m,
        )?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }
}

fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// Identifies a configuration together with the scenario it runs, seed included.
pub fn config_hash(cfg: &ConfigFile, scenario: &Scenario) -> String {
    let scenario = serde_json::to_string(scenario).expect("scenario serializes");
    sha256_hex(&[cfg.to_toml().as_bytes(), scenario.as_bytes()])
}

/// Identifies everything channel data depends on besides the phantom: the
/// array and the fast-time sampling.
pub fn geometry_hash(cfg: &ConfigFile) -> String {
    let key = serde_json::json!({
        "num_elements": cfg.num_elements,
        "pitch_m": cfg.pitch_m,
        "kerf_m": cfg.kerf_m,
        "tx_center_frequency_hz": cfg.tx_center_frequency_hz,
        "sound_speed_mps": cfg.sound_speed_mps,
        "sampling_frequency_hz": cfg.sampling_frequency_hz,
    });
    sha256_hex(&[key.to_string().as_bytes()])
}
