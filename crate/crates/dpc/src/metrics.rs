//! Reconstruction quality metrics: offset-invariant SNR, thresholded
//! nonzero counts, and cohort sparsity statistics.

use crate::error::{DpcError, Result};
use crate::forward::DpcImage;
use crate::phantom::PhaseImage;
use ndarray::Array2;

/// Upper cap on reported LSNR, hit when the residual is exactly zero.
pub const LSNR_CAP_DB: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsnrResult {
    /// `10 log10( ||truth||^2 / ||truth - recon - b||^2 )`, capped at 300 dB.
    pub lsnr_db: f64,
    /// The additive constant removed before scoring: `mean(truth - recon)`.
    pub offset: f64,
}

/// Linear-regressed SNR between a ground-truth phase map and a reconstruction.
///
/// The constant `b = mean(truth - recon)` maximizes the ratio, so phase maps
/// that differ only by an additive constant score the cap.
pub fn lsnr(truth: &PhaseImage, recon: &PhaseImage) -> Result<LsnrResult> {
    if truth.dim() != recon.dim() {
        return Err(DpcError::DimensionMismatch { expected: truth.dim(), actual: recon.dim() });
    }
    let signal: f64 = truth.values.iter().map(|v| v * v).sum();
    if signal == 0.0 {
        return Err(DpcError::ZeroReference);
    }
    let n = truth.values.len() as f64;
    let offset = truth
        .values
        .iter()
        .zip(recon.values.iter())
        .map(|(t, r)| t - r)
        .sum::<f64>()
        / n;
    let residual: f64 = truth
        .values
        .iter()
        .zip(recon.values.iter())
        .map(|(t, r)| {
            let d = t - r - offset;
            d * d
        })
        .sum();
    let lsnr_db = if residual == 0.0 {
        LSNR_CAP_DB
    } else {
        (10.0 * (signal / residual).log10()).min(LSNR_CAP_DB)
    };
    Ok(LsnrResult { lsnr_db, offset })
}

/// Count of samples with `|value| > epsilon`.
pub fn l0_count(image: &Array2<f64>, epsilon: f64) -> usize {
    image.iter().filter(|v| v.abs() > epsilon).count()
}

#[derive(Debug, Clone)]
pub struct SparsityReport {
    pub epsilon: f64,
    /// Nonzero count of each input image.
    pub counts: Vec<usize>,
    /// Histogram over the counts: `bin_edges` has one more entry than masses.
    pub bin_edges: Vec<f64>,
    pub bin_masses: Vec<usize>,
    /// Empirical CDF of the counts, sampled at each distinct count value.
    pub cdf: Vec<(f64, f64)>,
}

/// Per-image nonzero counts with a shared threshold, plus their histogram
/// and empirical CDF.
pub fn sparsity_stats(images: &[DpcImage], epsilon: f64, bins: usize) -> Result<SparsityReport> {
    if images.len() < 2 {
        return Err(DpcError::Config("sparsity statistics need at least 2 images".into()));
    }
    if bins == 0 {
        return Err(DpcError::Config("histogram needs at least one bin".into()));
    }
    let counts: Vec<usize> = images.iter().map(|img| l0_count(&img.values, epsilon)).collect();

    let lo = *counts.iter().min().unwrap() as f64;
    let hi = *counts.iter().max().unwrap() as f64;
    let span = if hi > lo { hi - lo } else { 1.0 };
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + span * i as f64 / bins as f64).collect();
    let mut bin_masses = vec![0usize; bins];
    for &count in &counts {
        let pos = ((count as f64 - lo) / span * bins as f64).floor() as usize;
        bin_masses[pos.min(bins - 1)] += 1;
    }

    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let mut cdf = Vec::new();
    let mut seen = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let value = sorted[i];
        while i < sorted.len() && sorted[i] == value {
            seen += 1;
            i += 1;
        }
        cdf.push((value as f64, seen as f64 / n));
    }

    Ok(SparsityReport { epsilon, counts, bin_edges, bin_masses, cdf })
}

/// Evaluate an empirical CDF (as returned in [`SparsityReport::cdf`]) at `x`.
pub fn cdf_at(cdf: &[(f64, f64)], x: f64) -> f64 {
    let mut value = 0.0;
    for &(point, mass) in cdf {
        if point <= x {
            value = mass;
        } else {
            break;
        }
    }
    value
}
