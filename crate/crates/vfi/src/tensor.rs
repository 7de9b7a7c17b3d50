//! Binary tensors: a flat little-endian `f32` file plus a JSON sidecar.
//!
//! `foo.bin` holds the samples in row-major order of `dims`; complex tensors
//! interleave real and imaginary parts. `foo.json` carries the header.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vfi_core::beamform::BeamformedEnsemble;
use vfi_core::rfsynth::ChannelData;
use vfi_core::Complex64;

use crate::error::{CliError, Result};

pub const FORMAT: &str = "vfi-tensor/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DType {
    F32,
    ComplexF32,
}

impl DType {
    fn width(self) -> usize {
        match self {
            DType::F32 => 1,
            DType::ComplexF32 => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub format: String,
    pub dtype: DType,
    /// Channel data: `[frames, elements, samples]`. Beamformed: `[frames, points]`.
    pub dims: Vec<usize>,
    /// Fast-time sample interval in seconds.
    pub dt: f64,
    pub geometry_hash: String,
    pub config_hash: String,
    pub ensemble: usize,
    pub seed: u64,
}

impl TensorHeader {
    fn values(&self) -> usize {
        self.dims.iter().product::<usize>() * self.dtype.width()
    }
}

pub fn sidecar(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

fn write(bin: &Path, header: &TensorHeader, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(header.values() * 4);
    for v in values {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    debug_assert_eq!(bytes.len(), header.values() * 4);
    std::fs::write(bin, &bytes).map_err(|e| CliError::io(bin, e))?;
    let side = sidecar(bin);
    let json = serde_json::to_string_pretty(header).expect("header serializes");
    std::fs::write(&side, json).map_err(|e| CliError::io(&side, e))
}

/// Reads a header and its samples. The geometry hash must equal `geometry_hash`.
fn read(bin: &Path, dtype: DType, geometry_hash: &str) -> Result<(TensorHeader, Vec<f32>)> {
    let side = sidecar(bin);
    let text = std::fs::read_to_string(&side).map_err(|e| CliError::io(&side, e))?;
    let header: TensorHeader = serde_json::from_str(&text).map_err(|e| CliError::parse(&side, e))?;
    if header.format != FORMAT {
        return Err(CliError::parse(&side, format!("unsupported format `{}`", header.format)));
    }
    if header.dtype != dtype {
        return Err(CliError::parse(&side, format!("expected {dtype:?} samples, found {:?}", header.dtype)));
    }
    if header.geometry_hash != geometry_hash {
        return Err(CliError::HashMismatch {
            path: side,
            expected: geometry_hash.to_string(),
            found: header.geometry_hash,
        });
    }
    let bytes = std::fs::read(bin).map_err(|e| CliError::io(bin, e))?;
    if bytes.len() != header.values() * 4 {
        return Err(CliError::parse(
            bin,
            format!("{} bytes on disk, header {:?} needs {}", bytes.len(), header.dims, header.values() * 4),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((header, values))
}

/// Header fields shared by every tensor of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTag {
    pub dt: f64,
    pub geometry_hash: String,
    pub config_hash: String,
    pub seed: u64,
}

impl RunTag {
    fn header(&self, dtype: DType, dims: Vec<usize>, ensemble: usize) -> TensorHeader {
        TensorHeader {
            format: FORMAT.into(),
            dtype,
            dims,
            dt: self.dt,
            geometry_hash: self.geometry_hash.clone(),
            config_hash: self.config_hash.clone(),
            ensemble,
            seed: self.seed,
        }
    }
}

pub fn write_channel_data(bin: &Path, data: &ChannelData, tag: &RunTag, ensemble: usize) -> Result<()> {
    let header = tag.header(DType::F32, vec![data.frames, data.elements, data.samples], ensemble);
    write(bin, &header, data.data.iter().copied())
}

pub fn read_channel_data(bin: &Path, geometry_hash: &str) -> Result<(TensorHeader, ChannelData)> {
    let (header, values) = read(bin, DType::F32, geometry_hash)?;
    let [frames, elements, samples] = header.dims[..] else {
        return Err(CliError::parse(bin, format!("channel data needs 3 dims, got {:?}", header.dims)));
    };
    let data = ChannelData {
        frames,
        elements,
        samples,
        data: values.into_iter().map(f64::from).collect(),
    };
    Ok((header, data))
}

pub fn write_beamformed(bin: &Path, e: &BeamformedEnsemble, tag: &RunTag, ensemble: usize) -> Result<()> {
    let header = tag.header(DType::ComplexF32, vec![e.frames, e.points()], ensemble);
    write(bin, &header, e.values.iter().flat_map(|v| [v.re, v.im]))
}

/// Samples of a beamformed ensemble, `[frame][point]`. The layout is not
/// stored; it follows from the configuration that produced the file.
pub fn read_beamformed(bin: &Path, geometry_hash: &str) -> Result<(TensorHeader, Vec<Complex64>)> {
    let (header, values) = read(bin, DType::ComplexF32, geometry_hash)?;
    if header.dims.len() != 2 {
        return Err(CliError::parse(bin, format!("beamformed data needs 2 dims, got {:?}", header.dims)));
    }
    let samples = values
        .chunks_exact(2)
        .map(|c| Complex64::new(f64::from(c[0]), f64::from(c[1])))
        .collect();
    Ok((header, samples))
}
