//! End-to-end runs: phantom, channel data, beamforming, clutter filtering,
//! both estimators, the depth gate and evaluation, over several ensembles.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::beamform::{demodulate, BasebandData, BeamformedEnsemble, Beamformer, Steer};
use crate::clutter::svd_filter;
use crate::error::{Error, Result, Stage, StageExt};
use crate::estimators::{directional_velocity, stdmr_estimate, DepthEstimate, DirectionalSettings, FrequencyPair, LagOne};
use crate::fusion::{depth_profile, evaluate, fuse, ProfileMetrics, ProfilePoint};
use crate::grid::{Method, PixelGrid, VelocityField};
use crate::params::SystemConfig;
use crate::phantom::{add_background, seed_scatterers, true_velocity_field, ScattererField, TissueRegion, VesselSpec};
use crate::rfsynth::{add_noise, sample_window, synthesize_ensemble, ChannelData, PulseSpec};

/// Static tissue around the vessels.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tissue {
    /// Scatterers per square millimeter.
    pub density: f64,
    /// Amplitude relative to blood.
    pub gain: f64,
}

/// Phantom and processing settings that are not part of the acquisition.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub name: String,
    pub vessels: Vec<VesselSpec>,
    /// Lateral extent of the evaluated region.
    pub roi_x: (f64, f64),
    /// Blood scatterers per square millimeter.
    pub blood_density: f64,
    pub tissue: Option<Tissue>,
    /// Channel SNR in dB; `None` for noiseless data.
    pub snr_db: Option<f64>,
    pub fractional_bandwidth: f64,
    /// Singular components removed per beamformed ensemble; 0 disables the
    /// filter. Only useful with tissue: on blood alone it removes the slow,
    /// near-DC part of transverse flow.
    pub clutter_rank: usize,
    /// Minimum quality for Kasai pairs and correlation peaks.
    pub quality_threshold: f64,
    /// Axial and lateral half-widths, in pixels, of the Kasai pooling kernel;
    /// `(0, 0)` is per-pixel.
    pub kernel: (usize, usize),
    pub seed: u64,
}

fn vessel(center_z: f64, radius: f64, inclination_deg: f64) -> VesselSpec {
    VesselSpec {
        center_x: 0.0,
        center_z,
        radius,
        inclination_deg,
        peak_velocity: 0.5,
        half_length: 3e-3,
    }
}

impl Scenario {
    fn with_vessels(name: &str, vessels: Vec<VesselSpec>) -> Self {
        Self {
            name: name.into(),
            vessels,
            roi_x: (-2.5e-3, 2.5e-3),
            blood_density: 30.0,
            tissue: None,
            snr_db: Some(30.0),
            fractional_bandwidth: 0.6,
            clutter_rank: 0,
            quality_threshold: 0.3,
            kernel: (0, 0),
            seed: 1,
        }
    }

    /// Transverse 8 mm vessel at 8 mm and a 10 mm vessel at 22 mm inclined
    /// 10 degrees, both blood only. Tubes end 0.5 mm past the ROI: longer
    /// tubes add wide-angle echoes that omnidirectional elements do not reject.
    pub fn two_vessel() -> Self {
        Self::with_vessels("two_vessel", vec![vessel(8e-3, 4e-3, 0.0), vessel(22e-3, 5e-3, 10.0)])
    }

    pub fn shallow_only() -> Self {
        Self::with_vessels("shallow_only", vec![vessel(8e-3, 4e-3, 0.0)])
    }

    pub fn deep_only() -> Self {
        Self::with_vessels("deep_only", vec![vessel(22e-3, 5e-3, 10.0)])
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "two_vessel" => Some(Self::two_vessel()),
            "shallow_only" => Some(Self::shallow_only()),
            "deep_only" => Some(Self::deep_only()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vessels.is_empty() {
            return Err(Error::validation("vessels", "at least one vessel required"));
        }
        for v in &self.vessels {
            v.validate()?;
        }
        if !(self.roi_x.1 > self.roi_x.0) {
            return Err(Error::validation("roi_x", "must be an increasing interval"));
        }
        if !(self.blood_density > 0.0) {
            return Err(Error::validation("blood_density", "must be positive"));
        }
        if !(self.quality_threshold >= 0.0 && self.quality_threshold <= 1.0) {
            return Err(Error::validation("quality_threshold", "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn peak_velocity(&self) -> f64 {
        self.vessels.iter().map(|v| v.peak_velocity).fold(0.0, f64::max)
    }

    /// Estimates faster than this are rejected.
    pub fn v_max(&self) -> f64 {
        2.0 * self.peak_velocity()
    }

    /// Evaluation grid: `roi_x` laterally, the vessels' depth span plus half
    /// a millimeter axially.
    pub fn grid(&self, cfg: &SystemConfig) -> Result<PixelGrid> {
        let (z0, z1) = self.depth_span();
        let dz = cfg.beamform.grid_dz;
        let start = ((z0 - 0.5e-3) / dz).floor().max(1.0) * dz;
        PixelGrid::new(self.roi_x.0, self.roi_x.1, cfg.beamform.grid_dx, start, z1 + 0.5e-3, dz)
    }

    fn depth_span(&self) -> (f64, f64) {
        self.vessels.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            let (lo, hi) = v.depth_range();
            (a.min(lo), b.max(hi))
        })
    }

    pub fn truth(&self, cfg: &SystemConfig) -> Result<VelocityField> {
        true_velocity_field(&self.grid(cfg)?, &self.vessels)
    }

    /// Seed of ensemble `index`, derived from the scenario seed.
    pub fn ensemble_seed(&self, index: usize) -> u64 {
        splitmix64(self.seed ^ splitmix64(index as u64 + 1))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d1_049b_133a_11eb);
    z ^ (z >> 31)
}

/// Samples covering the slowest echo: the deepest, widest phantom corner to
/// the farthest element, plus the pulse tail.
fn record_length(cfg: &SystemConfig, scenario: &Scenario, pulse: &PulseSpec) -> usize {
    let (_, z1) = scenario.depth_span();
    let z = z1 + 1e-3;
    let x = scenario
        .vessels
        .iter()
        .map(|v| v.lateral_range().0.abs().max(v.lateral_range().1.abs()))
        .fold(0.0, f64::max)
        .max(scenario.roi_x.0.abs())
        .max(scenario.roi_x.1.abs());
    let (e0, e1) = cfg.geometry.span();
    let dx = x + e0.abs().max(e1.abs());
    let t = (z + (dx * dx + z * z).sqrt()) / cfg.acquisition.sound_speed + pulse.half_support();
    let fs = cfg.acquisition.sampling_frequency;
    ((t * fs).ceil() as usize + 2).max(sample_window(z, &cfg.acquisition))
}

/// Scatterers of ensemble `index` at its first frame, blood and tissue.
pub fn ensemble_phantom(scenario: &Scenario, index: usize) -> Result<ScattererField> {
    scenario.validate()?;
    let seed = scenario.ensemble_seed(index);
    let (z0, z1) = scenario.depth_span();
    let mut field = seed_scatterers(&scenario.vessels, scenario.blood_density, seed).stage(Stage::Phantom)?;
    if let Some(t) = scenario.tissue {
        let half = scenario.vessels.iter().map(|v| v.half_length).fold(0.0, f64::max);
        let region = TissueRegion {
            x_range: (-half, half),
            z_range: ((z0 - 1e-3).max(0.5e-3), z1 + 1e-3),
            density: t.density,
            gain: t.gain,
        };
        add_background(&mut field, &region, &scenario.vessels, splitmix64(seed)).stage(Stage::Phantom)?;
    }
    Ok(field)
}

/// Channel data for ensemble `index`.
pub fn simulate_ensemble(cfg: &SystemConfig, scenario: &Scenario, index: usize) -> Result<ChannelData> {
    let field = ensemble_phantom(scenario, index)?;
    let seed = scenario.ensemble_seed(index);
    let acq = &cfg.acquisition;
    let pulse = PulseSpec::new(acq.tx_center_frequency, scenario.fractional_bandwidth).stage(Stage::Synthesis)?;
    let samples = record_length(cfg, scenario, &pulse);
    let data = synthesize_ensemble(&field, &scenario.vessels, &cfg.geometry, acq, &pulse, samples)
        .stage(Stage::Synthesis)?;
    match scenario.snr_db {
        Some(snr) => add_noise(&data, snr, splitmix64(seed ^ 0x5eed)).stage(Stage::Synthesis),
        None => Ok(data),
    }
}

/// Both estimators on one ensemble, before gating.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEstimate {
    /// Directional estimate at every grid depth.
    pub directional: Vec<DepthEstimate>,
    /// Triangulation estimate at every grid pixel.
    pub triangulation: VelocityField,
    /// Steered-beam samples whose aperture was clipped by the array edge.
    pub clipped: usize,
}

impl EnsembleEstimate {
    pub fn field(&self, method: PipelineMethod, cfg: &SystemConfig) -> Result<VelocityField> {
        fuse(&self.directional, &self.triangulation, method.z_limit(cfg)).stage(Stage::Fusion)
    }
}

fn filtered(e: BeamformedEnsemble, rank: usize) -> Result<BeamformedEnsemble> {
    svd_filter(&e, rank).stage(Stage::Clutter)
}

fn lag_one_map(e: &BeamformedEnsemble) -> Vec<LagOne> {
    crate::par::map_range(e.points(), |p| LagOne::of(&e.slow_time(p)))
}

/// Sums `map` over a `(2 hz + 1) x (2 hx + 1)` pixel box, clipped at the edges.
fn pool(map: &[LagOne], grid: &PixelGrid, (hz, hx): (usize, usize)) -> Vec<LagOne> {
    let (nz, nx) = (grid.nz(), grid.nx());
    crate::par::map_range(grid.len(), |i| {
        let (iz, ix) = (i / nx, i % nx);
        let mut acc = LagOne::default();
        for z in iz.saturating_sub(hz)..(iz + hz + 1).min(nz) {
            for x in ix.saturating_sub(hx)..(ix + hx + 1).min(nx) {
                acc.add(&map[z * nx + x]);
            }
        }
        acc
    })
}

fn triangulation_field(
    cfg: &SystemConfig,
    scenario: &Scenario,
    bf: &Beamformer<'_>,
    iq: &BasebandData,
    grid: &PixelGrid,
) -> Result<(VelocityField, usize)> {
    let acq = &cfg.acquisition;
    let mut clipped = 0;
    let mut per_angle = Vec::with_capacity(cfg.beamform.rx_angles_deg.len());
    for &alpha in &cfg.beamform.rx_angles_deg {
        let mut maps = Vec::with_capacity(2);
        for steer in [Steer::left(alpha), Steer::right(alpha)] {
            let e = bf.beamform_grid(iq, grid, Some(steer));
            if !e.is_finite() {
                return Err(Error::Stage {
                    stage: Stage::Beamform,
                    source: alloc::boxed::Box::new(Error::domain("beamformed sample", "finite", f64::NAN)),
                });
            }
            clipped += e.clipped;
            let e = filtered(e, scenario.clutter_rank)?;
            let est: Vec<_> = pool(&lag_one_map(&e), grid, scenario.kernel)
                .iter()
                .map(|l| l.estimate(acq.prf))
                .collect();
            maps.push(est);
        }
        per_angle.push((alpha, maps));
    }

    let c = acq.sound_speed;
    let f0 = acq.tx_center_frequency;
    let v_max = scenario.v_max();
    let mut field = VelocityField::empty(grid.clone());
    for i in 0..grid.len() {
        // Kasai phase falls as the path lengthens; the triangulation model
        // counts that as a positive shift.
        let pairs: Vec<FrequencyPair> = per_angle
            .iter()
            .map(|(alpha, m)| FrequencyPair {
                f_left: -m[0][i].frequency,
                f_right: -m[1][i].frequency,
                alpha_deg: *alpha,
                quality: m[0][i].quality.min(m[1][i].quality),
            })
            .collect();
        field.method[i] = Some(Method::Triangulation);
        match stdmr_estimate(&pairs, c, f0, scenario.quality_threshold) {
            Ok(e) if e.speed() <= v_max => field.set(i, e.vx, e.vz, Method::Triangulation, e.quality),
            Ok(e) => field.quality[i] = e.quality,
            Err(Error::InsufficientQuality { .. }) => {}
            Err(e) => return Err(e).stage(Stage::Estimation),
        }
    }
    Ok((field, clipped))
}

/// Demodulates, beamforms and runs both estimators on one ensemble.
pub fn estimate_ensemble(cfg: &SystemConfig, scenario: &Scenario, data: &ChannelData) -> Result<EnsembleEstimate> {
    let acq = &cfg.acquisition;
    if data.elements != cfg.geometry.num_elements() || data.frames != acq.frames_per_ensemble {
        return Err(Error::Shape(alloc::format!(
            "channel data is {} frames x {} elements, configuration expects {} x {}",
            data.frames,
            data.elements,
            acq.frames_per_ensemble,
            cfg.geometry.num_elements()
        )))
        .stage(Stage::Beamform);
    }
    let grid = scenario.grid(cfg)?;
    let iq = demodulate(data, acq);
    let bf = Beamformer::new(cfg);

    let spacing = cfg.beamform.directional_line_spacing;
    let lines = bf
        .directional_lines(&iq, &grid.z, grid.x[0], grid.x[grid.nx() - 1], spacing)
        .stage(Stage::Beamform)?;
    let lines = filtered(lines, scenario.clutter_rank)?;
    let settings = DirectionalSettings::new(scenario.v_max(), acq.prf, spacing, scenario.quality_threshold);
    let directional = directional_velocity(&lines, acq.prf, spacing, &settings).stage(Stage::Estimation)?;

    let (triangulation, clipped) = triangulation_field(cfg, scenario, &bf, &iq, &grid)?;
    Ok(EnsembleEstimate {
        directional,
        triangulation,
        clipped,
    })
}

/// The three ways of producing a field from an [`EnsembleEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PipelineMethod {
    /// Directional cross-correlation at every depth.
    Directional,
    /// Triangulation at every depth.
    Stdmr,
    /// Directional above the limiting depth, triangulation below.
    Fusion,
}

impl PipelineMethod {
    pub const ALL: [PipelineMethod; 3] = [PipelineMethod::Directional, PipelineMethod::Stdmr, PipelineMethod::Fusion];

    pub fn as_str(&self) -> &'static str {
        match self {
            PipelineMethod::Directional => "directional",
            PipelineMethod::Stdmr => "stdmr",
            PipelineMethod::Fusion => "fusion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }

    /// Gate depth: rows shallower than this use the directional estimate.
    pub fn z_limit(&self, cfg: &SystemConfig) -> f64 {
        match self {
            PipelineMethod::Directional => f64::INFINITY,
            PipelineMethod::Stdmr => f64::NEG_INFINITY,
            PipelineMethod::Fusion => cfg.limiting_depth(),
        }
    }
}

/// Metrics of one method over all ensembles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MethodResult {
    pub method: PipelineMethod,
    pub metrics: ProfileMetrics,
    /// Speed profile along the column nearest the vessels' lateral center.
    pub profile: Vec<ProfilePoint>,
}

/// Scores `fields` (one per ensemble) against the scenario's ground truth.
pub fn score(
    scenario: &Scenario,
    truth: &VelocityField,
    method: PipelineMethod,
    fields: &[VelocityField],
) -> Result<MethodResult> {
    let metrics = evaluate(fields, truth, scenario.peak_velocity()).stage(Stage::Evaluation)?;
    let x_mid = scenario.vessels[0].center_x;
    let profile = depth_profile(fields, truth, x_mid).stage(Stage::Evaluation)?;
    Ok(MethodResult {
        method,
        metrics,
        profile,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub truth: VelocityField,
    pub estimates: Vec<EnsembleEstimate>,
    pub results: Vec<MethodResult>,
}

/// Simulates and processes `cfg.acquisition.ensembles` ensembles, then scores `methods`.
pub fn run_pipeline(cfg: &SystemConfig, scenario: &Scenario, methods: &[PipelineMethod]) -> Result<RunOutput> {
    scenario.validate()?;
    let truth = scenario.truth(cfg).stage(Stage::Phantom)?;
    let mut estimates = Vec::with_capacity(cfg.acquisition.ensembles);
    for k in 0..cfg.acquisition.ensembles {
        let data = simulate_ensemble(cfg, scenario, k)?;
        estimates.push(estimate_ensemble(cfg, scenario, &data)?);
    }
    let mut results = Vec::with_capacity(methods.len());
    for &m in methods {
        let fields = estimates.iter().map(|e| e.field(m, cfg)).collect::<Result<Vec<_>>>()?;
        results.push(score(scenario, &truth, m, &fields)?);
    }
    Ok(RunOutput {
        truth,
        estimates,
        results,
    })
}
