//! Metrics JSON, velocity-field and profile CSV, and the comparison table.
//!
//! CSV files start with a `# config_hash=<hex>` comment line, then a header row.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use vfi_core::fusion::{ProfilePoint, VelocityField, VesselMetrics};
use vfi_core::pipeline::{MethodResult, PipelineMethod};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub method: PipelineMethod,
    pub bias_pct: f64,
    pub std_pct: f64,
    pub n_valid: usize,
    pub n_invalid: usize,
    /// Gate depth; absent when one branch serves every depth.
    pub z_limit_m: Option<f64>,
    pub seed: u64,
    pub per_vessel: Vec<VesselMetrics>,
    pub profile: Vec<ProfilePoint>,
}

impl MetricsRow {
    pub fn new(result: &MethodResult, z_limit: f64, seed: u64) -> Self {
        Self {
            method: result.method,
            bias_pct: result.metrics.mean_bias_pct,
            std_pct: result.metrics.std_pct,
            n_valid: result.metrics.n_valid,
            n_invalid: result.metrics.n_invalid,
            z_limit_m: z_limit.is_finite().then_some(z_limit),
            seed,
            per_vessel: result.metrics.per_vessel.clone(),
            profile: result.profile.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub config_hash: String,
    pub scenario: String,
    pub rows: Vec<MetricsRow>,
}

impl MetricsFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, format!("malformed metrics: {e}")))
    }
}

/// Rows of several metrics files, which must all share one config hash.
pub fn merge(files: &[MetricsFile]) -> Result<(String, Vec<MetricsRow>)> {
    let Some(first) = files.first() else {
        return Err(CliError::Usage("report needs at least one metrics file".into()));
    };
    let mut rows = Vec::new();
    for f in files {
        if f.config_hash != first.config_hash {
            return Err(CliError::MixedRuns(first.config_hash.clone(), f.config_hash.clone()));
        }
        rows.extend(f.rows.iter().cloned());
    }
    Ok((first.config_hash.clone(), rows))
}

fn display_name(m: PipelineMethod) -> &'static str {
    match m {
        PipelineMethod::Directional => "Directional",
        PipelineMethod::Stdmr => "STDMR",
        PipelineMethod::Fusion => "Fusion",
    }
}

/// Method, bias and std columns, one row per metrics row.
pub fn table(rows: &[MetricsRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{:<12} {:>9} {:>9} {:>8}", "Method", "Bias (%)", "Std (%)", "Pixels").unwrap();
    for r in rows {
        writeln!(
            s,
            "{:<12} {:>9.2} {:>9.2} {:>8}",
            display_name(r.method),
            r.bias_pct,
            r.std_pct,
            r.n_valid
        )
        .unwrap();
    }
    s
}

pub fn profile_csv(config_hash: &str, rows: &[MetricsRow]) -> String {
    let mut s = format!("# config_hash={config_hash}\nmethod,z_m,v_true_mps,v_est_mean_mps,v_est_std_mps\n");
    for r in rows {
        for p in &r.profile {
            writeln!(
                s,
                "{},{:e},{:e},{:e},{:e}",
                r.method.as_str(),
                p.z_m,
                p.v_true,
                p.v_est_mean,
                p.v_est_std
            )
            .unwrap();
        }
    }
    s
}

pub fn field_csv(config_hash: &str, field: &VelocityField) -> String {
    let mut s = format!("# config_hash={config_hash}\nx_m,z_m,vx_mps,vz_mps,method,quality,valid\n");
    for i in 0..field.len() {
        let (x, z) = field.grid.pixel(i);
        let method = field.method[i].map_or("", |m| m.as_str());
        writeln!(
            s,
            "{:e},{:e},{:e},{:e},{},{:e},{}",
            x, z, field.vx[i], field.vz[i], method, field.quality[i], field.valid[i]
        )
        .unwrap();
    }
    s
}

/// The config hash from the first line of a CSV written by this module.
pub fn csv_config_hash(text: &str) -> Option<&str> {
    text.lines().next()?.strip_prefix("# config_hash=")
}
