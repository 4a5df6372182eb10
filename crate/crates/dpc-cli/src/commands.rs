//! Implementations of the `simulate`, `reconstruct`, `ptf`, and `sensor`
//! commands.

use crate::config::{parse_axis, usage, SimulateConfig, METHOD_NAMES};
use crate::manifest::{sha256_file, FileEntry, Manifest};
use anyhow::{Context, Result};
use dpc::forward::{add_noise, simulate_dpc, DpcImage, NoiseSpec};
use dpc::optics::{
    compute_ptf, make_frequency_grid, make_pupil, make_source_pair, OpticalConfig, SourceGeometry,
    TransferFunction,
};
use dpc::phantom::generate_phantom;
use dpc::pfm::{read_pfm, write_pfm};
use dpc::sensor::{auto_params_with_beta, estimate_noise};
use dpc::solvers::{
    hqs_reconstruct, rld_reconstruct, tikhonov_reconstruct, tv_reconstruct, DpcStack, HqsConfig,
    RldConfig, SolveOutput, TikhonovConfig, TvConfig,
};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Build the transfer function of every configured axis.
pub fn build_transfer_functions(
    optical: &OpticalConfig,
    axes: &[String],
    geometry: SourceGeometry,
) -> Result<Vec<TransferFunction>> {
    let grid = make_frequency_grid(optical)?;
    let pupil = make_pupil(&grid, optical)?;
    let mut tfs = Vec::with_capacity(axes.len());
    for axis in axes {
        let direction = match parse_axis(axis) {
            Ok(d) => d,
            Err(e) => return usage(e),
        };
        let (pos, neg) = make_source_pair(&grid, optical, direction, geometry)?;
        tfs.push(compute_ptf(&grid, &pupil, &pos, &neg)?);
    }
    Ok(tfs)
}

/// Derive the per-axis noise seed from the base seed.
pub fn axis_noise_seed(base: u64, axis_index: usize) -> u64 {
    crate::seed::mix(&[base, 0x6e6f6973, axis_index as u64])
}

pub fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<()> {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read config {}: {e}", config_path.display())),
    };
    let config: SimulateConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => return usage(format!("invalid config {}: {e}", config_path.display())),
    };
    if let Err(e) = config.validate() {
        return usage(e);
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;

    // Track written files so a failure leaves no partial outputs behind.
    let mut written: Vec<PathBuf> = Vec::new();
    let result = simulate_into(&config, out_dir, &mut written);
    if result.is_err() {
        for path in &written {
            let _ = std::fs::remove_file(path);
        }
    }
    result
}

fn simulate_into(config: &SimulateConfig, out_dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let tfs = build_transfer_functions(&config.optical, &config.axes, config.geometry)?;
    let phantom = generate_phantom(&config.phantom)?;

    let mut write = |name: &str, values: &ndarray::Array2<f64>, axis: Option<String>,
                     written: &mut Vec<PathBuf>|
     -> Result<FileEntry> {
        let path = out_dir.join(name);
        write_pfm(&path, values)?;
        written.push(path.clone());
        Ok(FileEntry { path: name.to_string(), sha256: sha256_file(&path)?, axis })
    };

    let phantom_file = write("phantom.pfm", &phantom.values, None, written)?;
    let mut dpc_files = Vec::new();
    let mut dpc_noisy_files = Vec::new();
    for (i, tf) in tfs.iter().enumerate() {
        let clean = simulate_dpc(&phantom, tf)?;
        dpc_files.push(write(
            &format!("dpc_{i}.pfm"),
            &clean.values,
            Some(tf.axis.clone()),
            written,
        )?);
        let noisy_spec = NoiseSpec {
            seed: axis_noise_seed(config.noise.seed, i),
            ..config.noise
        };
        let noisy = add_noise(&clean.values, &noisy_spec);
        dpc_noisy_files.push(write(
            &format!("dpc_noisy_{i}.pfm"),
            &noisy,
            Some(tf.axis.clone()),
            written,
        )?);
    }

    let manifest = Manifest { config: config.clone(), phantom_file, dpc_files, dpc_noisy_files };
    let manifest_path = out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    written.push(manifest_path);
    Ok(())
}

/// Which stored stack a downstream command reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StackChoice {
    Noisy,
    Clean,
}

pub fn load_stack(manifest: &Manifest, base_dir: &Path, choice: StackChoice) -> Result<DpcStack> {
    manifest.verify_checksums(base_dir)?;
    let tfs = build_transfer_functions(
        &manifest.config.optical,
        &manifest.config.axes,
        manifest.config.geometry,
    )?;
    let entries = match choice {
        StackChoice::Noisy => &manifest.dpc_noisy_files,
        StackChoice::Clean => &manifest.dpc_files,
    };
    let mut images = Vec::with_capacity(entries.len());
    for (entry, tf) in entries.iter().zip(tfs.iter()) {
        let values = read_pfm(&manifest.resolve(base_dir, entry))?;
        images.push(DpcImage { values, axis: tf.axis.clone() });
    }
    Ok(DpcStack::new(images, tfs)?)
}

/// Per-method solver dispatch used by `reconstruct` and the benchmark.
pub fn run_method(method: &str, stack: &DpcStack, alpha: f64, beta: f64) -> Result<SolveOutput> {
    let out = match method {
        "tikhonov" => tikhonov_reconstruct(stack, &TikhonovConfig { alpha })?,
        "tv" => tv_reconstruct(stack, &TvConfig::new(alpha)?)?,
        "dsp-hqs" => hqs_reconstruct(stack, &HqsConfig::new(alpha, beta)?)?,
        "dsp-rld" => rld_reconstruct(stack, &RldConfig::new(alpha, beta)?)?,
        other => anyhow::bail!("unknown method {other:?}"),
    };
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct ReconstructReport {
    pub method: String,
    pub width: usize,
    pub height: usize,
    pub sensor_a: f64,
    pub alpha_used: f64,
    pub beta_used: f64,
    pub steps: usize,
    pub wall_ms: f64,
    pub trace: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_reconstruct(
    manifest_path: &Path,
    method: &str,
    alpha_override: Option<f64>,
    beta_override: Option<f64>,
    choice: StackChoice,
    out_dir: &Path,
) -> Result<()> {
    if !METHOD_NAMES.contains(&method) {
        return usage(format!("unknown method {method:?}; expected one of {METHOD_NAMES:?}"));
    }
    let manifest = Manifest::load(manifest_path)?;
    let base_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let stack = load_stack(&manifest, base_dir, choice)?;

    // Unless overridden, both weights come from the noise sensor.
    let estimate = estimate_noise(&stack);
    let auto = auto_params_with_beta(&estimate, beta_override);
    let alpha = alpha_override.unwrap_or(auto.alpha);
    let beta = auto.beta;
    if auto.disabled && alpha_override.is_none() {
        eprintln!("warning: sensor reports A = 0; regularization is disabled");
    }

    let start = Instant::now();
    let out = run_method(method, &stack, alpha, beta)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    std::fs::create_dir_all(out_dir)?;
    write_pfm(&out_dir.join("phase.pfm"), &out.phase.values)?;
    let (h, w) = out.phase.dim();
    let report = ReconstructReport {
        method: method.to_string(),
        width: w,
        height: h,
        sensor_a: estimate.a,
        alpha_used: alpha,
        beta_used: if method == "tikhonov" { 0.0 } else { beta },
        steps: out.steps,
        wall_ms,
        trace: out.trace,
    };
    std::fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(())
}

pub fn cmd_ptf(
    config_path: &Path,
    axis: &str,
    geometry: SourceGeometry,
    out_dir: &Path,
) -> Result<()> {
    let text = match std::fs::read_to_string(config_path) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read config {}: {e}", config_path.display())),
    };
    let optical: OpticalConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => return usage(format!("invalid optical config: {e}")),
    };
    if let Err(e) = optical.validate() {
        return usage(e.to_string());
    }
    let tfs = build_transfer_functions(&optical, &[axis.to_string()], geometry)?;
    let tf = &tfs[0];
    std::fs::create_dir_all(out_dir)?;
    write_pfm(&out_dir.join("ptf_real.pfm"), &tf.values.mapv(|v| v.re))?;
    write_pfm(&out_dir.join("ptf_imag.pfm"), &tf.values.mapv(|v| v.im))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SensorReport {
    #[serde(rename = "A")]
    a: f64,
    alpha: f64,
    beta: f64,
    per_image: Vec<f64>,
}

pub fn cmd_sensor(manifest_path: &Path, choice: StackChoice) -> Result<String> {
    let manifest = Manifest::load(manifest_path)?;
    let base_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let stack = load_stack(&manifest, base_dir, choice)?;
    let estimate = estimate_noise(&stack);
    let params = auto_params_with_beta(&estimate, None);
    if params.disabled {
        eprintln!("warning: A = 0; regularization is disabled");
    }
    let report = SensorReport {
        a: estimate.a,
        alpha: params.alpha,
        beta: params.beta,
        per_image: estimate.per_image,
    };
    Ok(serde_json::to_string_pretty(&report)?)
}
