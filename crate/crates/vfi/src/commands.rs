//! The `simulate`, `estimate`, `report` and `reproduce` subcommands.
//!
//! `simulate` writes into its output directory:
//!
//! * `config.toml`, the effective configuration after overrides
//! * `scenario.json`, the phantom and processing settings
//! * `ensemble_NNN.bin` / `.json`, channel data per ensemble
//! * `phantom_NNN.csv` with `--dump-phantom`
//! * `manifest.json`
//!
//! `estimate` reads such a directory and writes `metrics.json`,
//! `field_<method>_NNN.csv` and `manifest.json`. `report` turns metrics
//! files into `table.txt` and `profile.csv`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vfi_core::phantom::ScattererField;
use vfi_core::pipeline::{self, PipelineMethod, Scenario};

use crate::config::{config_hash, geometry_hash, ConfigFile};
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;
use crate::report::{self, MetricsFile, MetricsRow};
use crate::tensor::{self, RunTag};

pub const CONFIG_FILE: &str = "config.toml";
pub const SCENARIO_FILE: &str = "scenario.json";
pub const METRICS_FILE: &str = "metrics.json";

/// Settings shared by the commands that resolve a configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub ensembles: Option<usize>,
    pub frames: Option<usize>,
    pub angles: Option<Vec<f64>>,
}

impl RunOptions {
    /// `--config` wins over `--preset`; with neither, `fallback` (a
    /// `config.toml` from an earlier step) and then the desk preset are used.
    fn config(&self, fallback: Option<&Path>) -> Result<ConfigFile> {
        let mut cfg = match (&self.config, &self.preset, fallback) {
            (Some(path), _, _) => ConfigFile::load(path)?,
            (None, Some(name), _) => ConfigFile::preset(name)?,
            (None, None, Some(path)) if path.exists() => ConfigFile::load(path)?,
            _ => ConfigFile::preset("desk")?,
        };
        if let Some(n) = self.ensembles {
            cfg.ensembles = n;
        }
        if let Some(n) = self.frames {
            cfg.frames_per_ensemble = n;
        }
        if let Some(a) = &self.angles {
            cfg.rx_angles_deg = a.clone();
        }
        cfg.to_system()?;
        Ok(cfg)
    }

    fn scenario(&self) -> Result<Scenario> {
        let name = self.scenario.as_deref().unwrap_or("two_vessel");
        let mut s = Scenario::preset(name).ok_or_else(|| {
            CliError::Usage(format!(
                "unknown scenario `{name}` (expected two_vessel, shallow_only or deep_only)"
            ))
        })?;
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub config_hash: String,
    pub scenario: Scenario,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn ensemble_bin(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("ensemble_{k:03}.bin"))
}

fn phantom_csv(hash: &str, field: &ScattererField) -> String {
    let mut s = format!("# config_hash={hash}\nx_m,z_m,amplitude,vessel_id\n");
    for i in 0..field.len() {
        let (x, z) = field.positions[i];
        let id = field.vessel_id[i].map_or_else(|| "-1".to_string(), |v| v.to_string());
        writeln!(s, "{x:e},{z:e},{:e},{id}", field.amplitudes[i]).unwrap();
    }
    s
}

/// Synthesizes every ensemble and writes channel data to `out`.
pub fn simulate(opts: &RunOptions, out: &Path, dump_phantom: bool) -> Result<RunManifest> {
    let cfg_file = opts.config(None)?;
    let cfg = cfg_file.to_system()?;
    let scenario = opts.scenario()?;
    scenario.validate()?;
    let hash = config_hash(&cfg_file, &scenario);
    create_dir(out)?;

    let mut manifest = RunManifest::new("simulate", &hash, scenario.seed);
    write_text(&out.join(CONFIG_FILE), &format!("# config_hash={hash}\n{}", cfg_file.to_toml()))?;
    manifest.output(CONFIG_FILE);
    let scenario_file = ScenarioFile {
        config_hash: hash.clone(),
        scenario: scenario.clone(),
    };
    write_text(&out.join(SCENARIO_FILE), &serde_json::to_string_pretty(&scenario_file).unwrap())?;
    manifest.output(SCENARIO_FILE);

    let tag = RunTag {
        dt: 1.0 / cfg.acquisition.sampling_frequency,
        geometry_hash: geometry_hash(&cfg_file),
        config_hash: hash.clone(),
        seed: scenario.seed,
    };
    for k in 0..cfg.acquisition.ensembles {
        let data = manifest.time(&format!("synthesis/{k}"), || {
            Ok(pipeline::simulate_ensemble(&cfg, &scenario, k)?)
        })?;
        let bin = ensemble_bin(out, k);
        tensor::write_channel_data(&bin, &data, &tag, k)?;
        manifest.output(file_name(&bin));
        manifest.output(file_name(&tensor::sidecar(&bin)));
        if dump_phantom {
            let field = pipeline::ensemble_phantom(&scenario, k)?;
            let name = format!("phantom_{k:03}.csv");
            write_text(&out.join(&name), &phantom_csv(&hash, &field))?;
            manifest.output(name);
        }
    }
    manifest.write(out)?;
    Ok(manifest)
}

fn file_name(p: &Path) -> String {
    p.file_name().expect("file path").to_string_lossy().into_owned()
}

/// Beamforms and estimates every ensemble in `input`, scores `methods` and
/// writes metrics and fields to `out`.
pub fn estimate(opts: &RunOptions, input: &Path, out: &Path, methods: &[PipelineMethod]) -> Result<RunManifest> {
    if !input.is_dir() {
        return Err(CliError::io(
            input,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input directory not found"),
        ));
    }
    let cfg_file = opts.config(Some(&input.join(CONFIG_FILE)))?;
    let cfg = cfg_file.to_system()?;
    let scenario_path = input.join(SCENARIO_FILE);
    let text = std::fs::read_to_string(&scenario_path).map_err(|e| CliError::io(&scenario_path, e))?;
    let stored: ScenarioFile = serde_json::from_str(&text).map_err(|e| CliError::parse(&scenario_path, e))?;
    let mut scenario = stored.scenario;
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    let hash = config_hash(&cfg_file, &scenario);
    if hash != stored.config_hash {
        return Err(CliError::HashMismatch {
            path: scenario_path,
            expected: hash,
            found: stored.config_hash,
        });
    }
    let geometry = geometry_hash(&cfg_file);
    create_dir(out)?;

    let mut manifest = RunManifest::new("estimate", &hash, scenario.seed);
    let mut estimates = Vec::with_capacity(cfg.acquisition.ensembles);
    for k in 0..cfg.acquisition.ensembles {
        let bin = ensemble_bin(input, k);
        let (header, data) = tensor::read_channel_data(&bin, &geometry)?;
        if header.config_hash != hash {
            return Err(CliError::HashMismatch {
                path: tensor::sidecar(&bin),
                expected: hash,
                found: header.config_hash,
            });
        }
        let e = manifest.time(&format!("estimation/{k}"), || {
            Ok(pipeline::estimate_ensemble(&cfg, &scenario, &data)?)
        })?;
        estimates.push(e);
    }

    let truth = scenario.truth(&cfg)?;
    let mut rows = Vec::with_capacity(methods.len());
    let mut written = Vec::new();
    manifest.time("evaluation", || {
        for &m in methods {
            let fields = estimates.iter().map(|e| e.field(m, &cfg)).collect::<vfi_core::Result<Vec<_>>>()?;
            for (k, f) in fields.iter().enumerate() {
                let name = format!("field_{}_{k:03}.csv", m.as_str());
                write_text(&out.join(&name), &report::field_csv(&hash, f))?;
                written.push(name);
            }
            let result = pipeline::score(&scenario, &truth, m, &fields)?;
            rows.push(MetricsRow::new(&result, m.z_limit(&cfg), scenario.seed));
        }
        Ok(())
    })?;
    written.into_iter().for_each(|n| manifest.output(n));
    let metrics = MetricsFile {
        config_hash: hash.clone(),
        scenario: scenario.name.clone(),
        rows,
    };
    write_text(&out.join(METRICS_FILE), &metrics.to_json())?;
    manifest.output(METRICS_FILE);
    manifest.write(out)?;
    Ok(manifest)
}

pub struct ReportOutput {
    pub table: String,
    pub written: Vec<PathBuf>,
}

/// Comparison table and profile CSV from one or more metrics files. When
/// `out` already holds a manifest for the same run, the new files are
/// appended to it.
pub fn report(files: &[PathBuf], out: Option<&Path>) -> Result<ReportOutput> {
    let loaded = files.iter().map(|p| MetricsFile::load(p)).collect::<Result<Vec<_>>>()?;
    let (hash, rows) = report::merge(&loaded)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => files[0].parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    create_dir(&dir)?;
    let table = report::table(&rows);
    let table_path = dir.join("table.txt");
    let profile_path = dir.join("profile.csv");
    write_text(&table_path, &table)?;
    write_text(&profile_path, &report::profile_csv(&hash, &rows))?;
    if let Ok(mut m) = RunManifest::load(&dir) {
        if m.config_hash == hash {
            for name in ["table.txt", "profile.csv"] {
                if !m.outputs.iter().any(|o| o == name) {
                    m.output(name);
                }
            }
            m.write(&dir)?;
        }
    }
    Ok(ReportOutput {
        table,
        written: vec![table_path, profile_path],
    })
}

/// Simulation into `out/channels`, estimation of all three methods into
/// `out`, then the report.
pub fn reproduce(opts: &RunOptions, out: &Path) -> Result<ReportOutput> {
    let channels = out.join("channels");
    simulate(opts, &channels, false)?;
    estimate(opts, &channels, out, &PipelineMethod::ALL)?;
    report(&[out.join(METRICS_FILE)], Some(out))
}
