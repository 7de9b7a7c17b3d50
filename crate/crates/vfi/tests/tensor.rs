use proptest::prelude::*;
use vfi::tensor::{read_beamformed, read_channel_data, sidecar, write_beamformed, write_channel_data, RunTag};
use vfi::CliError;
use vfi_core::beamform::{BeamformedEnsemble, Branch, Layout};
use vfi_core::grid::PixelGrid;
use vfi_core::rfsynth::ChannelData;
use vfi_core::Complex64;

fn tag() -> RunTag {
    RunTag {
        dt: 1e-8,
        geometry_hash: "g".repeat(64),
        config_hash: "c".repeat(64),
        seed: 9,
    }
}

fn data(frames: usize, elements: usize, samples: usize) -> ChannelData {
    let mut d = ChannelData::zeros(frames, elements, samples);
    for (i, v) in d.data.iter_mut().enumerate() {
        *v = ((i * 37 % 101) as f64 - 50.0) * 0.125;
    }
    d
}

#[test]
fn channel_data_round_trips_exactly_for_f32_values() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("ensemble_000.bin");
    let d = data(3, 4, 50);
    write_channel_data(&bin, &d, &tag(), 0).unwrap();
    assert_eq!(std::fs::metadata(&bin).unwrap().len(), 3 * 4 * 50 * 4);
    let (h, back) = read_channel_data(&bin, &tag().geometry_hash).unwrap();
    assert_eq!(back, d);
    assert_eq!(h.dims, vec![3, 4, 50]);
    assert_eq!((h.seed, h.ensemble, h.dt), (9, 0, 1e-8));
    assert_eq!(h.config_hash, tag().config_hash);
}

#[test]
fn samples_are_little_endian_f32_in_frame_element_sample_order() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("t.bin");
    let mut d = ChannelData::zeros(2, 2, 3);
    d.data[(2 + 1) * 3 + 2] = 1.5; // frame 1, element 1, sample 2
    write_channel_data(&bin, &d, &tag(), 4).unwrap();
    let bytes = std::fs::read(&bin).unwrap();
    let at = 11 * 4;
    assert_eq!(&bytes[at..at + 4], &1.5f32.to_le_bytes());
    assert!(bytes[..at].iter().all(|b| *b == 0));
}

#[test]
fn wrong_geometry_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("t.bin");
    write_channel_data(&bin, &data(2, 2, 8), &tag(), 0).unwrap();
    let err = read_channel_data(&bin, &"x".repeat(64)).unwrap_err();
    assert!(matches!(err, CliError::HashMismatch { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn truncated_payload_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("t.bin");
    write_channel_data(&bin, &data(2, 2, 8), &tag(), 0).unwrap();
    let bytes = std::fs::read(&bin).unwrap();
    std::fs::write(&bin, &bytes[..bytes.len() - 4]).unwrap();
    let err = read_channel_data(&bin, &tag().geometry_hash).unwrap_err();
    assert!(matches!(err, CliError::Parse { .. }), "{err}");
}

#[test]
fn missing_sidecar_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("t.bin");
    write_channel_data(&bin, &data(2, 2, 8), &tag(), 0).unwrap();
    std::fs::remove_file(sidecar(&bin)).unwrap();
    let err = read_channel_data(&bin, &tag().geometry_hash).unwrap_err();
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn beamformed_samples_interleave_re_im() {
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("bf.bin");
    let grid = PixelGrid::from_axes(vec![0.0, 1e-4, 2e-4], vec![5e-3]);
    let values: Vec<Complex64> = (0..6).map(|i| Complex64::new(i as f64, -0.5 * i as f64)).collect();
    let e = BeamformedEnsemble {
        frames: 2,
        layout: Layout::Grid(grid),
        branch: Branch::Grid,
        values: values.clone(),
        clipped: 0,
    };
    write_beamformed(&bin, &e, &tag(), 1).unwrap();
    let bytes = std::fs::read(&bin).unwrap();
    assert_eq!(&bytes[8..12], &1.0f32.to_le_bytes());
    assert_eq!(&bytes[12..16], &(-0.5f32).to_le_bytes());
    let (h, back) = read_beamformed(&bin, &tag().geometry_hash).unwrap();
    assert_eq!(h.dims, vec![2, 3]);
    assert_eq!(back, values);
    // a complex tensor is not channel data
    assert!(read_channel_data(&bin, &tag().geometry_hash).is_err());
}

proptest! {
    #[test]
    fn any_f32_representable_data_round_trips(values in proptest::collection::vec(-1e6f32..1e6, 24)) {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("p.bin");
        let d = ChannelData { frames: 2, elements: 3, samples: 4, data: values.iter().map(|v| f64::from(*v)).collect() };
        write_channel_data(&bin, &d, &tag(), 0).unwrap();
        let (_, back) = read_channel_data(&bin, &tag().geometry_hash).unwrap();
        prop_assert_eq!(back, d);
    }
}
