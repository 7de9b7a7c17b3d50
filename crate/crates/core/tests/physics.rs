use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use vfi_core::beamform::{demodulate, BeamformedEnsemble, Beamformer, Branch, Layout, Steer};
use vfi_core::clutter::svd_filter;
use vfi_core::estimators::directional::{directional_velocity, DirectionalSettings};
use vfi_core::estimators::{DepthEstimate, VelocityEstimate};
use vfi_core::fusion::{fuse, Method, PixelGrid, VelocityField};
use vfi_core::params::{limiting_depth, ArrayGeometry, SystemConfig};
use vfi_core::phantom::{advance_scatterers, seed_scatterers, ScattererField, VesselSpec};
use vfi_core::rfsynth::{sample_window, synthesize_ensemble, synthesize_frame, ChannelData, PulseSpec};
use vfi_core::Complex64;

fn point(x: f64, z: f64, a: f64) -> ScattererField {
    let mut f = ScattererField::default();
    f.push((x, z), a, None);
    f
}

fn pulse(cfg: &SystemConfig) -> PulseSpec {
    PulseSpec::new(cfg.acquisition.tx_center_frequency, 0.6).unwrap()
}

#[test]
fn limiting_depth_reproduces_experimental_value() {
    let z = limiting_depth(1.71, 30.0 * 0.3e-3).unwrap();
    assert_eq!(format!("{:.1}", z * 1e3), "15.4");
    assert!((z - 15.39e-3).abs() < 1e-15);
    // linear in both arguments
    let a = limiting_depth(2.0, 5.775e-3).unwrap();
    assert!((limiting_depth(4.0, 5.775e-3).unwrap() - 2.0 * a).abs() < 1e-15);
    assert!((limiting_depth(2.0, 11.55e-3).unwrap() - 2.0 * a).abs() < 1e-15);
    assert!(limiting_depth(0.0, 1e-3).is_err());
    assert!(limiting_depth(2.0, 0.0).is_err());
}

#[test]
fn pulse_peaks_at_round_trip_sample() {
    let cfg = SystemConfig::paper();
    let geometry = ArrayGeometry::new(3, 0.1925e-3, 0.01e-3, 5e-3).unwrap();
    assert_eq!(geometry.element_x()[1], 0.0);
    let samples = 2000;
    let f = synthesize_frame(&point(0.0, 10e-3, 1.0), &geometry, &cfg.acquisition, &pulse(&cfg), samples).unwrap();
    let trace = &f[samples..2 * samples];
    let peak = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    let expect = (100e6 * 2.0 * 0.01 / 1540.0_f64).round() as usize;
    assert_eq!(expect, 1299);
    assert_eq!(peak, expect);
}

#[test]
fn synthesis_is_linear_and_symmetric() {
    let cfg = SystemConfig::paper();
    let p = pulse(&cfg);
    let n = sample_window(0.02, &cfg.acquisition);
    let a = point(0.4e-3, 8e-3, 0.7);
    let b = point(-1.1e-3, 14e-3, -1.3);
    let fa = synthesize_frame(&a, &cfg.geometry, &cfg.acquisition, &p, n).unwrap();
    let fb = synthesize_frame(&b, &cfg.geometry, &cfg.acquisition, &p, n).unwrap();
    let fab = synthesize_frame(&a.union(&b), &cfg.geometry, &cfg.acquisition, &p, n).unwrap();
    let scale = fab.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..fab.len() {
        assert!((fab[i] - fa[i] - fb[i]).abs() <= 1e-9 * scale);
    }

    let c = synthesize_frame(&point(0.0, 12e-3, 1.0), &cfg.geometry, &cfg.acquisition, &p, n).unwrap();
    let m = cfg.geometry.num_elements();
    let peak = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for j in 0..m / 2 {
        let (l, r) = (&c[j * n..(j + 1) * n], &c[(m - 1 - j) * n..(m - j) * n]);
        for (x, y) in l.iter().zip(r) {
            assert!((x - y).abs() <= 1e-9 * peak);
        }
    }

    let mut cancel = point(1e-3, 9e-3, 2.0);
    cancel.push((1e-3, 9e-3), -2.0, None);
    let z = synthesize_frame(&cancel, &cfg.geometry, &cfg.acquisition, &p, n).unwrap();
    assert!(z.iter().all(|v| *v == 0.0));
}

#[test]
fn static_medium_gives_identical_frames() {
    let mut cfg = SystemConfig::paper();
    cfg.acquisition.frames_per_ensemble = 3;
    let vessel = VesselSpec {
        center_x: 0.0,
        center_z: 8e-3,
        radius: 1e-3,
        inclination_deg: 0.0,
        peak_velocity: 0.0,
        half_length: 2e-3,
    };
    let field = seed_scatterers(std::slice::from_ref(&vessel), 5.0, 4).unwrap();
    let n = sample_window(0.012, &cfg.acquisition) + 200;
    let d = synthesize_ensemble(&field, &[vessel], &cfg.geometry, &cfg.acquisition, &pulse(&cfg), n).unwrap();
    assert_eq!((d.frames, d.elements), (3, 128));
    assert_eq!(d.frame(0), d.frame(1));
    assert_eq!(d.frame(1), d.frame(2));
}

fn baseband(field: &ScattererField, cfg: &SystemConfig, z_max: f64) -> vfi_core::beamform::BasebandData {
    let n = sample_window(z_max, &cfg.acquisition) + 400;
    let f = synthesize_frame(field, &cfg.geometry, &cfg.acquisition, &pulse(cfg), n).unwrap();
    let rf = ChannelData::from_frames(cfg.geometry.num_elements(), n, vec![f]).unwrap();
    demodulate(&rf, &cfg.acquisition)
}

#[test]
fn point_target_is_localized_within_one_pixel() {
    let cfg = SystemConfig::paper();
    for (x0, z0) in [(0.3e-3, 12e-3), (-0.85e-3, 20.05e-3), (1.2e-3, 7.4e-3)] {
        let bb = baseband(&point(x0, z0, 1.0), &cfg, z0 + 2e-3);
        let bf = Beamformer::new(&cfg);
        let grid = PixelGrid::new(x0 - 1e-3, x0 + 1e-3, 0.1e-3, z0 - 1e-3, z0 + 1e-3, 0.1e-3).unwrap();
        let img = bf.beamform_grid(&bb, &grid, None);
        let best = (0..grid.len())
            .max_by(|a, b| img.values[*a].norm().total_cmp(&img.values[*b].norm()))
            .unwrap();
        let (x, z) = grid.pixel(best);
        assert!((x - x0).abs() <= 0.1e-3 + 1e-12, "x {x} vs {x0}");
        assert!((z - z0).abs() <= 0.1e-3 + 1e-12, "z {z} vs {z0}");
    }
}

#[test]
fn steered_responses_are_symmetric() {
    let cfg = SystemConfig::paper();
    let bf = Beamformer::new(&cfg);
    for z0 in [10e-3, 16e-3, 22e-3] {
        let bb = baseband(&point(0.0, z0, 1.0), &cfg, z0 + 2e-3);
        for alpha in [6.0, 9.0, 12.0, 15.0] {
            let l = bf.das_pixel(&bb, 0, (0.0, z0), Some(Steer::left(alpha))).value.norm();
            let r = bf.das_pixel(&bb, 0, (0.0, z0), Some(Steer::right(alpha))).value.norm();
            assert!((l / r - 1.0).abs() < 0.01, "z {z0} alpha {alpha}: {l} {r}");
        }
    }
}

#[test]
fn das_is_linear_in_the_data() {
    let cfg = SystemConfig::paper();
    let a = baseband(&point(0.2e-3, 9e-3, 1.0), &cfg, 12e-3);
    let b = baseband(&point(-0.5e-3, 10e-3, -0.6), &cfg, 12e-3);
    let ab = baseband(&point(0.2e-3, 9e-3, 1.0).union(&point(-0.5e-3, 10e-3, -0.6)), &cfg, 12e-3);
    let bf = Beamformer::new(&cfg);
    for p in [(0.2e-3, 9e-3), (0.0, 9.5e-3), (-0.5e-3, 10e-3)] {
        let va = bf.das_pixel(&a, 0, p, None).value;
        let vb = bf.das_pixel(&b, 0, p, None).value;
        let vab = bf.das_pixel(&ab, 0, p, None).value;
        assert!((vab - va - vb).norm() <= 1e-9 * vab.norm().max(va.norm()));
    }
}

#[test]
fn moving_a_target_by_one_spacing_shifts_the_line_by_one_sample() {
    let cfg = SystemConfig::paper();
    let bf = Beamformer::new(&cfg);
    let spacing = cfg.beamform.directional_line_spacing;
    let z = 8e-3;
    let a = baseband(&point(0.0, z, 1.0), &cfg, 10e-3);
    let b = baseband(&point(spacing, z, 1.0), &cfg, 10e-3);
    let la = bf.directional_lines(&a, &[z], -1e-3, 1e-3, spacing).unwrap();
    let lb = bf.directional_lines(&b, &[z], -1e-3, 1e-3, spacing).unwrap();
    let (sa, sb) = (la.line(0, 0), lb.line(0, 0));
    let peak = sa.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for i in 10..sa.len() - 10 {
        worst = worst.max((sb[i + 1] - sa[i]).norm());
    }
    assert!(worst < 0.02 * peak, "{}", worst / peak);
}

fn lines(frames: usize, depths: usize, n: usize, f: impl Fn(usize, usize, usize) -> Complex64) -> BeamformedEnsemble {
    let lateral: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let mut values = Vec::new();
    for k in 0..frames {
        for d in 0..depths {
            for i in 0..n {
                values.push(f(k, d, i));
            }
        }
    }
    BeamformedEnsemble {
        frames,
        layout: Layout::Lines {
            depths: (0..depths).map(|d| 1e-3 * (d + 1) as f64).collect(),
            lateral,
        },
        branch: Branch::DirectionalLine,
        values,
        clipped: 0,
    }
}

// Analytic speckle line, evaluated exactly at any fractional position.
fn speckle(t: f64, depth: usize) -> Complex64 {
    (0..10)
        .map(|m| {
            let k = 0.05 + 0.03 * m as f64;
            let ph = 1.7 * m as f64 + 0.9 * depth as f64;
            Complex64::from_polar(1.0 + 0.1 * m as f64, 2.0 * PI * k * t + ph)
        })
        .sum()
}

#[test]
fn lateral_speed_maps_to_expected_lag() {
    let cfg = SystemConfig::paper();
    let prf = cfg.acquisition.prf;
    let spacing = cfg.beamform.directional_line_spacing;
    let lag = 0.5 / (prf * spacing);
    assert!((lag - 1.665).abs() < 5e-4, "{lag}");
    let ens = lines(16, 2, 300, |k, d, i| speckle(i as f64 - lag * k as f64, d));
    let settings = DirectionalSettings::new(1.0, prf, spacing, 0.3);
    let est = directional_velocity(&ens, prf, spacing, &settings).unwrap();
    for e in est {
        let v = e.estimate.unwrap();
        assert!((v.vx / (spacing * prf) - lag).abs() < 0.1, "{}", v.vx);
        assert_eq!(v.vz, 0.0);
    }
}

#[test]
fn integer_shift_per_frame_is_exact() {
    let prf = 15.6e3;
    let spacing = 1e-5;
    let ens = lines(8, 3, 200, |k, d, i| speckle(i as f64 + 2.0 * k as f64, d));
    let settings = DirectionalSettings::new(1.0, prf, spacing, 0.3);
    for e in directional_velocity(&ens, prf, spacing, &settings).unwrap() {
        let v = e.estimate.unwrap();
        assert!((v.vx + 2.0 * spacing * prf).abs() < 1e-9);
    }
}

fn casorati(points: usize, frames: usize, f: impl Fn(usize, usize) -> Complex64) -> BeamformedEnsemble {
    let grid = PixelGrid::from_axes((0..points).map(|i| i as f64).collect(), vec![1.0]);
    let mut values = Vec::with_capacity(points * frames);
    for k in 0..frames {
        for p in 0..points {
            values.push(f(p, k));
        }
    }
    BeamformedEnsemble {
        frames,
        layout: Layout::Grid(grid),
        branch: Branch::Grid,
        values,
        clipped: 0,
    }
}

fn mixed(p: usize, k: usize) -> Complex64 {
    let tissue = Complex64::new((0.31 * p as f64).sin() + 0.4, (0.77 * p as f64).cos()) * 20.0;
    let phase = 2.0 * PI * (0.21 + 0.001 * p as f64) * k as f64;
    let blood = Complex64::from_polar(1.0 + 0.5 * (0.13 * p as f64).cos(), phase + 0.5 * p as f64);
    let wobble = Complex64::new(0.3 * (0.05 * (p * k) as f64).sin(), 0.2 * ((p + 3 * k) as f64 * 0.11).cos());
    tissue + blood + wobble
}

// Truncated SVD from nalgebra, used as an independent oracle.
fn oracle_filter(e: &BeamformedEnsemble, n_cut: usize) -> Vec<Complex64> {
    let (n, k) = (e.points(), e.frames);
    let x = DMatrix::from_fn(n, k, |r, c| e.values[c * n + r]);
    let svd = x.clone().svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
    let mut out = x;
    for &i in order.iter().take(n_cut) {
        let s = Complex64::new(svd.singular_values[i], 0.0);
        out -= u.column(i) * vt.row(i) * s;
    }
    let mut flat = vec![Complex64::new(0.0, 0.0); n * k];
    for c in 0..k {
        for r in 0..n {
            flat[c * n + r] = out[(r, c)];
        }
    }
    flat
}

#[test]
fn svd_filter_matches_nalgebra() {
    let e = casorati(120, 16, mixed);
    let scale = e.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for n_cut in [1usize, 2, 5] {
        let got = svd_filter(&e, n_cut).unwrap();
        let want = oracle_filter(&e, n_cut);
        for (a, b) in got.values.iter().zip(&want) {
            assert!((a - b).norm() < 1e-8 * scale, "n_cut {n_cut}: {a} {b}");
        }
    }
}

fn tissue(p: usize) -> Complex64 {
    Complex64::new((0.31 * p as f64).sin() + 0.4, (0.77 * p as f64).cos()) * 50.0
}

fn blood(p: usize, k: usize) -> Complex64 {
    let phase = 2.0 * PI * (0.21 + 0.001 * p as f64) * k as f64;
    Complex64::from_polar(1.0 + 0.5 * (0.13 * p as f64).cos(), phase + 0.5 * p as f64)
}

#[test]
fn rank_one_removed_and_blood_kept() {
    let norm = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let stat = casorati(150, 16, |p, _| tissue(p));
    let f = svd_filter(&stat, 1).unwrap();
    assert!(norm(&f.values) < 1e-9 * norm(&stat.values));

    let mix = casorati(150, 16, |p, k| tissue(p) + blood(p, k));
    let only_blood = casorati(150, 16, blood);
    let kept = svd_filter(&mix, 1).unwrap();
    let ratio = (norm(&kept.values) / norm(&only_blood.values)).powi(2);
    assert!(ratio >= 0.9, "{ratio}");
}

#[test]
fn filter_never_adds_energy() {
    let e = casorati(80, 16, mixed);
    let once = svd_filter(&e, 2).unwrap();
    let twice = svd_filter(&once, 2).unwrap();
    let norm = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    assert!(norm(&once.values) <= norm(&e.values));
    // a second pass strips the next two components
    assert!(norm(&twice.values) <= norm(&once.values) + 1e-12);
    let same = svd_filter(&e, 0).unwrap();
    assert_eq!(same, e);
    assert!(svd_filter(&e, 16).is_err());
}

proptest! {
    #[test]
    fn advancing_conserves_scatterers(seed in 0u64..1000, incl in -30.0..30.0f64, dt in 1e-5..1e-3f64) {
        let v = VesselSpec {
            center_x: 0.0,
            center_z: 10e-3,
            radius: 1e-3,
            inclination_deg: incl,
            peak_velocity: 0.5,
            half_length: 3e-3,
        };
        let field = seed_scatterers(std::slice::from_ref(&v), 4.0, seed).unwrap();
        prop_assert_eq!(field.len(), (6.0f64 * 2.0 * 4.0).round() as usize);
        let next = advance_scatterers(&field, std::slice::from_ref(&v), dt).unwrap();
        prop_assert_eq!(next.len(), field.len());
        prop_assert_eq!(&next.amplitudes, &field.amplitudes);
        for (a, b) in next.positions.iter().zip(&field.positions) {
            let (ua, wa) = v.to_local(a.0, a.1);
            let (_, wb) = v.to_local(b.0, b.1);
            prop_assert!((wa - wb).abs() < 1e-12);
            prop_assert!(ua.abs() <= v.half_length + 1e-12);
        }
    }

    #[test]
    fn fusion_partitions_rows_at_the_gate(z_limit in 0.5e-3..6.5e-3f64) {
        let grid = PixelGrid::new(-1e-3, 1e-3, 0.5e-3, 1e-3, 6e-3, 0.5e-3).unwrap();
        let shallow: Vec<DepthEstimate> = grid.z.iter().map(|&z| DepthEstimate {
            depth: z,
            estimate: Some(VelocityEstimate { vx: 0.3, vz: 0.0, method: Method::DirectionalXCorr, quality: 0.9 }),
            quality: 0.9,
        }).collect();
        let mut deep = VelocityField::empty(grid.clone());
        for i in 0..grid.len() {
            deep.set(i, 0.1, 0.2, Method::Triangulation, 0.8);
        }
        let fused = fuse(&shallow, &deep, z_limit).unwrap();
        for i in 0..grid.len() {
            let (_, z) = grid.pixel(i);
            let want = if z < z_limit { Method::DirectionalXCorr } else { Method::Triangulation };
            prop_assert_eq!(fused.method[i], Some(want));
            prop_assert!(fused.valid[i]);
            let vx = if z < z_limit { 0.3 } else { 0.1 };
            prop_assert_eq!(fused.vx[i], vx);
        }
    }
}
