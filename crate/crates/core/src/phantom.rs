//! Point-scatterer flow phantom with parabolic (Poiseuille) vessels.
//!
//! A vessel is a straight tube in the x-z plane. Scatterers are stored in
//! world coordinates but moved in the vessel frame: `u` along the axis,
//! `w` across it. Only `u` changes as blood flows, so the radial offset of
//! every scatterer is preserved, including across the wrap at the ends.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{PixelGrid, VelocityField};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VesselSpec {
    pub center_x: f64,
    pub center_z: f64,
    pub radius: f64,
    /// Angle of the vessel axis from the lateral (x) axis, positive toward depth.
    pub inclination_deg: f64,
    pub peak_velocity: f64,
    /// Extent of the tube along its axis on either side of the center.
    pub half_length: f64,
}

impl VesselSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) {
            return Err(Error::domain("vessel radius", "positive", self.radius));
        }
        if !(self.peak_velocity >= 0.0) {
            return Err(Error::domain("peak velocity", "non-negative", self.peak_velocity));
        }
        if !(self.inclination_deg.abs() < 90.0) {
            return Err(Error::domain("inclination", "within (-90, 90) degrees", self.inclination_deg));
        }
        if !(self.half_length > 0.0) {
            return Err(Error::domain("vessel half length", "positive", self.half_length));
        }
        Ok(())
    }

    /// Unit vector along the axis (direction of flow).
    pub fn axis(&self) -> (f64, f64) {
        let t = self.inclination_deg.to_radians();
        (t.cos(), t.sin())
    }

    /// World point to (along-axis, across-axis) offsets from the center.
    pub fn to_local(&self, x: f64, z: f64) -> (f64, f64) {
        let (c, s) = self.axis();
        let dx = x - self.center_x;
        let dz = z - self.center_z;
        (dx * c + dz * s, -dx * s + dz * c)
    }

    pub fn to_world(&self, u: f64, w: f64) -> (f64, f64) {
        let (c, s) = self.axis();
        (self.center_x + u * c - w * s, self.center_z + u * s + w * c)
    }

    /// Speed at perpendicular distance `r` from the axis.
    pub fn speed_at(&self, r: f64) -> f64 {
        let q = r / self.radius;
        if q.abs() <= 1.0 {
            self.peak_velocity * (1.0 - q * q)
        } else {
            0.0
        }
    }

    /// True for points inside the tube cross-section (ignores the axial extent).
    pub fn contains(&self, x: f64, z: f64) -> bool {
        self.to_local(x, z).1.abs() <= self.radius
    }

    /// Vertical extent of the tube over its axial length.
    pub fn depth_range(&self) -> (f64, f64) {
        let (c, s) = self.axis();
        let dz = self.half_length * s.abs() + self.radius * c;
        (self.center_z - dz, self.center_z + dz)
    }

    pub fn lateral_range(&self) -> (f64, f64) {
        let (c, s) = self.axis();
        let dx = self.half_length * c + self.radius * s.abs();
        (self.center_x - dx, self.center_x + dx)
    }
}

/// Moving point reflectors. `vessel_id[i]` is `None` for static tissue.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScattererField {
    pub positions: Vec<(f64, f64)>,
    pub amplitudes: Vec<f64>,
    pub vessel_id: Vec<Option<usize>>,
}

impl ScattererField {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn push(&mut self, pos: (f64, f64), amplitude: f64, vessel: Option<usize>) {
        self.positions.push(pos);
        self.amplitudes.push(amplitude);
        self.vessel_id.push(vessel);
    }

    /// Concatenation; used to check superposition of synthesized frames.
    pub fn union(&self, other: &ScattererField) -> ScattererField {
        let mut out = self.clone();
        out.positions.extend_from_slice(&other.positions);
        out.amplitudes.extend_from_slice(&other.amplitudes);
        out.vessel_id.extend_from_slice(&other.vessel_id);
        out
    }
}

/// Velocity at `point` due to `vessel`: parabolic profile along the axis,
/// zero outside the tube.
pub fn parabolic_velocity(point: (f64, f64), vessel: &VesselSpec) -> (f64, f64) {
    let (_, w) = vessel.to_local(point.0, point.1);
    let speed = vessel.speed_at(w);
    let (c, s) = vessel.axis();
    (speed * c, speed * s)
}

/// Uniformly fills each vessel tube with `round(area * density)` scatterers
/// of N(0, 1) amplitude. `density` is per square millimeter.
pub fn seed_scatterers(vessels: &[VesselSpec], density: f64, rng_seed: u64) -> Result<ScattererField> {
    if !(density > 0.0) {
        return Err(Error::domain("scatterer density", "positive", density));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut field = ScattererField::default();
    for (id, v) in vessels.iter().enumerate() {
        v.validate()?;
        let area_mm2 = (2.0 * v.half_length) * (2.0 * v.radius) * 1e6;
        let count = (area_mm2 * density).round() as usize;
        for _ in 0..count {
            let u = rng.random_range(-v.half_length..v.half_length);
            let w = rng.random_range(-v.radius..=v.radius);
            let a: f64 = rng.sample(StandardNormal);
            field.push(v.to_world(u, w), a, Some(id));
        }
    }
    Ok(field)
}

/// Static tissue filling a rectangle outside every vessel.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TissueRegion {
    pub x_range: (f64, f64),
    pub z_range: (f64, f64),
    /// Scatterers per square millimeter before excluding vessel lumens.
    pub density: f64,
    /// Amplitude scale relative to blood scatterers.
    pub gain: f64,
}

/// Appends static background scatterers. Candidates falling inside a vessel
/// are dropped, so the count is below `area * density` when vessels overlap
/// the region.
pub fn add_background(
    field: &mut ScattererField,
    region: &TissueRegion,
    vessels: &[VesselSpec],
    rng_seed: u64,
) -> Result<()> {
    if !(region.density > 0.0) {
        return Err(Error::domain("tissue density", "positive", region.density));
    }
    let (x0, x1) = region.x_range;
    let (z0, z1) = region.z_range;
    if !(x1 > x0 && z1 > z0) {
        return Err(Error::domain("tissue region extent", "positive", (x1 - x0).min(z1 - z0)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let count = ((x1 - x0) * (z1 - z0) * 1e6 * region.density).round() as usize;
    for _ in 0..count {
        let x = rng.random_range(x0..x1);
        let z = rng.random_range(z0..z1);
        let a: f64 = rng.sample(StandardNormal);
        if vessels.iter().any(|v| v.contains(x, z)) {
            continue;
        }
        field.push((x, z), a * region.gain, None);
    }
    Ok(())
}

/// Moves every vessel scatterer along its axis by the local parabolic speed
/// times `dt`, wrapping past either end of the tube. Tissue does not move.
pub fn advance_scatterers(field: &ScattererField, vessels: &[VesselSpec], dt: f64) -> Result<ScattererField> {
    if !(dt > 0.0) {
        return Err(Error::domain("time step", "positive", dt));
    }
    let mut out = field.clone();
    for (pos, id) in out.positions.iter_mut().zip(&field.vessel_id) {
        let Some(id) = *id else { continue };
        let v = vessels
            .get(id)
            .ok_or_else(|| Error::Shape(alloc::format!("scatterer references vessel {id}")))?;
        let (mut u, w) = v.to_local(pos.0, pos.1);
        u += v.speed_at(w) * dt;
        let len = 2.0 * v.half_length;
        while u > v.half_length {
            u -= len;
        }
        while u < -v.half_length {
            u += len;
        }
        *pos = v.to_world(u, w);
    }
    Ok(out)
}

/// Ground-truth velocity per pixel. Where vessels overlap the first listed wins.
pub fn true_velocity_field(grid: &PixelGrid, vessels: &[VesselSpec]) -> Result<VelocityField> {
    if grid.is_empty() {
        return Err(Error::GridMismatch("empty grid".into()));
    }
    let mut field = VelocityField::empty(grid.clone());
    for i in 0..grid.len() {
        let p = grid.pixel(i);
        if let Some((id, v)) = vessels.iter().enumerate().find(|(_, v)| v.contains(p.0, p.1)) {
            let (vx, vz) = parabolic_velocity(p, v);
            field.vx[i] = vx;
            field.vz[i] = vz;
            field.valid[i] = true;
            field.quality[i] = 1.0;
            field.vessel[i] = Some(id);
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transverse(v0: f64) -> VesselSpec {
        VesselSpec {
            center_x: 0.0,
            center_z: 8e-3,
            radius: 4e-3,
            inclination_deg: 0.0,
            peak_velocity: v0,
            half_length: 5e-3,
        }
    }

    #[test]
    fn centerline_velocity() {
        let v = transverse(0.5);
        assert_eq!(parabolic_velocity((1e-3, 8e-3), &v), (0.5, 0.0));
    }

    #[test]
    fn wall_velocity_is_zero() {
        let v = transverse(0.5);
        let (vx, vz) = parabolic_velocity((0.0, 12e-3), &v);
        assert!(vx.abs() < 1e-15 && vz.abs() < 1e-15);
        assert_eq!(parabolic_velocity((0.0, 13e-3), &v), (0.0, 0.0));
    }

    #[test]
    fn inclined_half_radius() {
        let v = VesselSpec {
            inclination_deg: 10.0,
            ..transverse(0.5)
        };
        let (c, s) = v.axis();
        // r = R/2 along the normal
        let p = (v.center_x - 2e-3 * s, v.center_z + 2e-3 * c);
        let (vx, vz) = parabolic_velocity(p, &v);
        assert!((vx.hypot(vz) - 0.375).abs() < 1e-12);
        assert!((vx - 0.3693).abs() < 5e-5);
        assert!((vz - 0.0651).abs() < 5e-5);
    }

    #[test]
    fn seeding_count_and_containment() {
        // 2 * 2.5 mm by 2 * 4 mm = 40 mm^2
        let v = VesselSpec {
            half_length: 2.5e-3,
            ..transverse(0.5)
        };
        let f = seed_scatterers(&[v.clone()], 5.0, 7).unwrap();
        assert_eq!(f.len(), 200);
        assert_eq!(f.amplitudes.len(), 200);
        for p in &f.positions {
            let (u, w) = v.to_local(p.0, p.1);
            assert!(w.abs() <= v.radius + 1e-15);
            assert!(u.abs() <= v.half_length + 1e-15);
        }
    }

    #[test]
    fn seeding_is_deterministic() {
        let v = [transverse(0.5)];
        assert_eq!(seed_scatterers(&v, 2.0, 11).unwrap(), seed_scatterers(&v, 2.0, 11).unwrap());
        assert_ne!(seed_scatterers(&v, 2.0, 11).unwrap(), seed_scatterers(&v, 2.0, 12).unwrap());
    }

    #[test]
    fn seeding_without_vessels_is_empty() {
        assert!(seed_scatterers(&[], 5.0, 1).unwrap().is_empty());
        assert!(seed_scatterers(&[], 0.0, 1).is_err());
    }

    #[test]
    fn advance_axis_scatterer() {
        let v = [transverse(0.5)];
        let mut f = ScattererField::default();
        f.push((0.0, 8e-3), 1.0, Some(0));
        let g = advance_scatterers(&f, &v, 1.0 / 15600.0).unwrap();
        assert!((g.positions[0].0 - 32.05e-6).abs() < 0.01e-6);
        assert!((g.positions[0].1 - 8e-3).abs() < 1e-15);
    }

    #[test]
    fn advance_static_flow_is_identity() {
        let v = [transverse(0.0)];
        let f = seed_scatterers(&v, 2.0, 3).unwrap();
        let g = advance_scatterers(&f, &v, 1e-4).unwrap();
        for (a, b) in f.positions.iter().zip(&g.positions) {
            assert!((a.0 - b.0).abs() < 1e-15 && (a.1 - b.1).abs() < 1e-15);
        }
    }

    #[test]
    fn advance_wraps_at_same_radius() {
        let v = VesselSpec {
            inclination_deg: 10.0,
            ..transverse(0.5)
        };
        let mut f = ScattererField::default();
        f.push(v.to_world(v.half_length - 1e-6, 1.5e-3), 1.0, Some(0));
        let g = advance_scatterers(&f, &[v.clone()], 1.0 / 15600.0).unwrap();
        let (u, w) = v.to_local(g.positions[0].0, g.positions[0].1);
        assert!(u < -v.half_length + 40e-6, "u = {u}");
        assert!((w - 1.5e-3).abs() < 1e-12);
    }

    #[test]
    fn advance_keeps_tissue_still() {
        let v = [transverse(0.5)];
        let mut f = ScattererField::default();
        f.push((1e-3, 20e-3), 3.0, None);
        let g = advance_scatterers(&f, &v, 1e-4).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn background_avoids_vessels() {
        let v = [transverse(0.5)];
        let mut f = ScattererField::default();
        let region = TissueRegion {
            x_range: (-3e-3, 3e-3),
            z_range: (2e-3, 16e-3),
            density: 5.0,
            gain: 2.0,
        };
        add_background(&mut f, &region, &v, 9).unwrap();
        assert!(!f.is_empty());
        assert!(f.len() < 6 * 14 * 5);
        assert!(f.positions.iter().all(|p| !v[0].contains(p.0, p.1)));
        assert!(f.vessel_id.iter().all(Option::is_none));
    }

    #[test]
    fn truth_field() {
        let v = [transverse(0.5)];
        let grid = PixelGrid::new(-1e-3, 1e-3, 0.5e-3, 2e-3, 14e-3, 0.5e-3).unwrap();
        let t = true_velocity_field(&grid, &v).unwrap();
        // center row, z = 8 mm
        let iz = t.grid.z.iter().position(|z| (z - 8e-3).abs() < 1e-12).unwrap();
        let i = t.grid.index(iz, 2);
        assert!((t.vx[i] - 0.5).abs() < 1e-12);
        assert_eq!(t.vessel[i], Some(0));
        // 2 mm is outside
        assert_eq!((t.vx[0], t.vz[0]), (0.0, 0.0));
        assert_eq!(t.vessel[0], None);
        // symmetric parabola along the diameter, max 0.5
        let col: Vec<f64> = (0..t.grid.nz()).map(|iz| t.vx[t.grid.index(iz, 2)]).collect();
        let n = col.len();
        for k in 0..n {
            let mirror = 2 * iz as isize - k as isize;
            if mirror >= 0 && (mirror as usize) < n {
                assert!((col[k] - col[mirror as usize]).abs() < 1e-12);
            }
        }
        assert!(col.iter().cloned().fold(0.0, f64::max) <= 0.5 + 1e-15);
        assert!(true_velocity_field(&PixelGrid::from_axes(Vec::new(), Vec::new()), &v).is_err());
    }

    #[test]
    fn first_vessel_wins_on_overlap() {
        let a = transverse(0.5);
        let b = VesselSpec {
            peak_velocity: 0.2,
            ..transverse(0.5)
        };
        let grid = PixelGrid::from_axes(alloc::vec![0.0], alloc::vec![8e-3]);
        let t = true_velocity_field(&grid, &[a, b]).unwrap();
        assert_eq!(t.vessel[0], Some(0));
        assert!((t.vx[0] - 0.5).abs() < 1e-12);
    }
}
