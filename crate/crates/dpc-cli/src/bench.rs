//! Benchmark harness: full factorial phantom x SNR x method x trial sweep
//! with deterministic per-trial seeds, per-record and summary CSV output.

use crate::commands::{build_transfer_functions, run_method};
use crate::config::RunConfig;
use crate::seed::mix;
use anyhow::{Context, Result};
use dpc::forward::{add_noise, low_order_background, simulate_dpc, DpcImage, NoiseMode, NoiseSpec};
use dpc::metrics::lsnr;
use dpc::phantom::{generate_phantom, PhaseImage};
use dpc::sensor::{auto_params, estimate_noise};
use dpc::solvers::DpcStack;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

/// SNR reference: noise sigma per assigned SNR is `LEVEL_REF * range`.
const LEVEL_REF: f64 = 0.25;

pub const RECORDS_HEADER: &str =
    "phantom,snr_db,method,trial,lsnr_db,wall_ms,alpha_used,beta_used,status";
pub const SUMMARY_HEADER: &str = "phantom,snr_db,method,trials,mean_lsnr_db,std_lsnr_db";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub phantom: String,
    pub snr_db: f64,
    pub method: String,
    pub trial: usize,
    pub lsnr_db: Option<f64>,
    pub wall_ms: f64,
    pub alpha_used: f64,
    pub beta_used: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryCell {
    pub phantom: String,
    pub snr_db: f64,
    pub method: String,
    pub trials: usize,
    pub mean_lsnr_db: f64,
    pub std_lsnr_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkSummary {
    pub cells: Vec<SummaryCell>,
    /// Mean over all phantoms and trials, per (snr, method): the comparison row.
    pub averages: Vec<SummaryCell>,
    pub total_records: usize,
    pub failed_records: usize,
}

impl BenchmarkSummary {
    pub fn average_for(&self, snr_db: f64, method: &str) -> Option<f64> {
        self.averages
            .iter()
            .find(|c| c.snr_db == snr_db && c.method == method)
            .map(|c| c.mean_lsnr_db)
    }
}

fn phantom_id(index: usize, config: &RunConfig) -> String {
    format!("{}-{}", index, config.phantoms[index].kind.name())
}

/// Run the sweep. Trials of one (phantom, snr) cell share their noisy stack
/// across methods, so methods are compared on identical data.
pub fn run_benchmark(config: &RunConfig, jobs: usize) -> Result<(Vec<BenchmarkRecord>, BenchmarkSummary)> {
    if let Err(e) = config.validate() {
        return crate::config::usage(e);
    }
    let tfs = build_transfer_functions(&config.optical, &config.axes, config.geometry)?;
    let phantoms: Vec<PhaseImage> = config
        .phantoms
        .iter()
        .map(generate_phantom)
        .collect::<dpc::Result<_>>()?;
    let clean_stacks: Vec<Vec<DpcImage>> = phantoms
        .iter()
        .map(|p| tfs.iter().map(|tf| simulate_dpc(p, tf).unwrap()).collect())
        .collect();

    // One work item per (phantom, snr, trial); methods run inside.
    let mut items = Vec::new();
    for p in 0..config.phantoms.len() {
        for (s, &snr) in config.snr_db.iter().enumerate() {
            for t in 0..config.trials {
                items.push((p, s, snr, t));
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .context("building worker pool")?;
    let results: Vec<Vec<BenchmarkRecord>> = pool.install(|| {
        items
            .par_iter()
            .map(|&(p, s, snr, t)| run_cell(config, &tfs, &phantoms[p], &clean_stacks[p], p, s, snr, t))
            .collect()
    });

    // Fixed record order: phantom, snr, trial, then method.
    let records: Vec<BenchmarkRecord> = results.into_iter().flatten().collect();
    let summary = summarize(config, &records);
    Ok((records, summary))
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    config: &RunConfig,
    tfs: &[dpc::optics::TransferFunction],
    phantom: &PhaseImage,
    clean: &[DpcImage],
    p: usize,
    s: usize,
    snr: f64,
    trial: usize,
) -> Vec<BenchmarkRecord> {
    // Assigned SNR references the clean image's typical structural contrast
    // amplitude, taken as a quarter of its range (edge responses overshoot,
    // so the extreme-to-extreme range runs well past the structure
    // amplitude): sigma = 0.25 * range * 10^(-SNR / 20). On top of the white
    // noise, an equally strong low-order background models the illumination
    // residue that the normalized subtraction cannot cancel.
    let level = LEVEL_REF * 10f64.powf(-snr / 20.0);
    let noisy: Vec<DpcImage> = clean
        .iter()
        .enumerate()
        .map(|(n, img)| {
            let spec = NoiseSpec {
                mode: NoiseMode::RangeFraction,
                level,
                seed: mix(&[config.master_seed, p as u64, s as u64, trial as u64, n as u64]),
            };
            let mut values = add_noise(&img.values, &spec);
            if config.background_fraction > 0.0 {
                let max = img.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = img.values.iter().copied().fold(f64::INFINITY, f64::min);
                let sigma = level * (max - min);
                let seed =
                    mix(&[config.master_seed, 0xb6, p as u64, s as u64, trial as u64, n as u64]);
                values += &low_order_background(
                    values.dim(),
                    config.background_fraction * sigma,
                    seed,
                );
            }
            DpcImage { values, axis: img.axis.clone() }
        })
        .collect();
    let stack = match DpcStack::new(noisy, tfs.to_vec()) {
        Ok(st) => st,
        Err(e) => {
            return config
                .methods
                .iter()
                .map(|m| failed_record(config, p, snr, m, trial, &e.to_string()))
                .collect()
        }
    };
    let params = auto_params(&estimate_noise(&stack));

    config
        .methods
        .iter()
        .map(|method| {
            let (alpha, beta) = if method == "tikhonov" {
                (config.tikhonov_alpha, 0.0)
            } else {
                (params.alpha, params.beta)
            };
            let start = Instant::now();
            match run_method(method, &stack, alpha, beta)
                .and_then(|out| Ok(lsnr(phantom, &out.phase)?))
            {
                Ok(score) => BenchmarkRecord {
                    phantom: phantom_id(p, config),
                    snr_db: snr,
                    method: method.clone(),
                    trial,
                    lsnr_db: Some(score.lsnr_db),
                    wall_ms: start.elapsed().as_secs_f64() * 1e3,
                    alpha_used: alpha,
                    beta_used: beta,
                    status: "ok".into(),
                },
                Err(e) => {
                    let mut rec = failed_record(config, p, snr, method, trial, &e.to_string());
                    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
                    rec.alpha_used = alpha;
                    rec.beta_used = beta;
                    rec
                }
            }
        })
        .collect()
}

fn failed_record(
    config: &RunConfig,
    p: usize,
    snr: f64,
    method: &str,
    trial: usize,
    message: &str,
) -> BenchmarkRecord {
    BenchmarkRecord {
        phantom: phantom_id(p, config),
        snr_db: snr,
        method: method.to_string(),
        trial,
        lsnr_db: None,
        wall_ms: 0.0,
        alpha_used: 0.0,
        beta_used: 0.0,
        status: format!("error: {}", message.replace([',', '\n'], ";")),
    }
}

fn summarize(config: &RunConfig, records: &[BenchmarkRecord]) -> BenchmarkSummary {
    let mut cells = Vec::new();
    for p in 0..config.phantoms.len() {
        let id = phantom_id(p, config);
        for &snr in &config.snr_db {
            for method in &config.methods {
                let scores: Vec<f64> = records
                    .iter()
                    .filter(|r| r.phantom == id && r.snr_db == snr && &r.method == method)
                    .filter_map(|r| r.lsnr_db)
                    .collect();
                if scores.is_empty() {
                    continue;
                }
                let (mean, std) = mean_std(&scores);
                cells.push(SummaryCell {
                    phantom: id.clone(),
                    snr_db: snr,
                    method: method.clone(),
                    trials: scores.len(),
                    mean_lsnr_db: mean,
                    std_lsnr_db: std,
                });
            }
        }
    }
    let mut averages = Vec::new();
    for &snr in &config.snr_db {
        for method in &config.methods {
            let scores: Vec<f64> = records
                .iter()
                .filter(|r| r.snr_db == snr && &r.method == method)
                .filter_map(|r| r.lsnr_db)
                .collect();
            if scores.is_empty() {
                continue;
            }
            let (mean, std) = mean_std(&scores);
            averages.push(SummaryCell {
                phantom: "average".into(),
                snr_db: snr,
                method: method.clone(),
                trials: scores.len(),
                mean_lsnr_db: mean,
                std_lsnr_db: std,
            });
        }
    }
    let failed = records.iter().filter(|r| r.status != "ok").count();
    BenchmarkSummary {
        cells,
        averages,
        total_records: records.len(),
        failed_records: failed,
    }
}

/// Mean and sample (n-1) standard deviation.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn write_outputs(
    out_dir: &Path,
    records: &[BenchmarkRecord],
    summary: &BenchmarkSummary,
) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut records_csv = String::from(RECORDS_HEADER);
    records_csv.push('\n');
    for r in records {
        let lsnr = r.lsnr_db.map(|v| format!("{v:.6}")).unwrap_or_default();
        records_csv.push_str(&format!(
            "{},{},{},{},{},{:.3},{:.9e},{:.9e},{}\n",
            r.phantom, r.snr_db, r.method, r.trial, lsnr, r.wall_ms, r.alpha_used, r.beta_used, r.status
        ));
    }
    std::fs::write(out_dir.join("records.csv"), records_csv)?;

    let mut summary_csv = String::from(SUMMARY_HEADER);
    summary_csv.push('\n');
    for c in summary.cells.iter().chain(summary.averages.iter()) {
        summary_csv.push_str(&format!(
            "{},{},{},{},{:.6},{:.6}\n",
            c.phantom, c.snr_db, c.method, c.trials, c.mean_lsnr_db, c.std_lsnr_db
        ));
    }
    std::fs::write(out_dir.join("summary.csv"), summary_csv)?;
    std::fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(summary)?)?;
    Ok(())
}

/// The standard sweep: five 600x600 phantoms in [0, 1] rad, four SNR levels,
/// four methods, ten trials. All five targets are binary/edge-structured —
/// the dark-field sparsity assumption (background cancels, contrast
/// concentrates at edges) does not hold for smooth full-field phase maps.
pub fn standard_run_config(master_seed: u64) -> RunConfig {
    use dpc::optics::{OpticalConfig, SourceGeometry};
    use dpc::phantom::{PhantomKind, PhantomSpec};
    let size = 600;
    RunConfig {
        optical: OpticalConfig::new(0.530, 0.3, 10.0, 3.46, size, size).unwrap(),
        phantoms: vec![
            PhantomSpec::new(PhantomKind::SiemensStar, size, (0.0, 1.0), 1),
            PhantomSpec::new(PhantomKind::BinaryBlobs, size, (0.0, 1.0), 2),
            PhantomSpec::new(PhantomKind::BarTarget, size, (0.0, 1.0), 3),
            PhantomSpec::new(PhantomKind::BinaryBlobs, size, (0.0, 1.0), 9),
            PhantomSpec::new(PhantomKind::TextMask, size, (0.0, 1.0), 5),
        ],
        snr_db: vec![10.0, 15.0, 20.0, 30.0],
        methods: vec!["tikhonov".into(), "tv".into(), "dsp-hqs".into(), "dsp-rld".into()],
        trials: 10,
        master_seed,
        axes: vec!["top-bottom".into(), "left-right".into()],
        geometry: SourceGeometry::HalfAnnulus { inner_factor: 0.9 },
        tikhonov_alpha: 1e-4,
        background_fraction: 1.0,
    }
}
