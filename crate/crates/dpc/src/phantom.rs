//! Phase phantom generation.
//!
//! Five deterministic target families stand in for real phase objects:
//! a Siemens star, random binary blobs, a resolution bar target, smooth
//! Gaussian bumps, and a block-letter text mask. Output values are phase
//! in radians, confined to the requested range.

use crate::error::{DpcError, Result};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A real-valued phase map in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseImage {
    pub values: Array2<f64>,
}

impl PhaseImage {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DpcError::Config("phase image contains non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    SiemensStar,
    BinaryBlobs,
    BarTarget,
    SmoothBumps,
    TextMask,
}

impl PhantomKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhantomKind::SiemensStar => "siemens-star",
            PhantomKind::BinaryBlobs => "binary-blobs",
            PhantomKind::BarTarget => "bar-target",
            PhantomKind::SmoothBumps => "smooth-bumps",
            PhantomKind::TextMask => "text-mask",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    /// Output is `size x size` pixels.
    pub size: usize,
    /// Phase range `[lo, hi]` in radians.
    pub phase_range: (f64, f64),
    /// Seed for the randomized families; ignored by the deterministic ones.
    #[serde(default)]
    pub seed: u64,
}

impl PhantomSpec {
    pub fn new(kind: PhantomKind, size: usize, phase_range: (f64, f64), seed: u64) -> Self {
        Self { kind, size, phase_range, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(DpcError::Config("phantom size must be positive".into()));
        }
        let (lo, hi) = self.phase_range;
        if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
            return Err(DpcError::Config(format!(
                "phase range must be finite with hi >= lo, got [{lo}, {hi}]"
            )));
        }
        Ok(())
    }
}

/// Generate a phantom. Deterministic for a given spec (including its seed).
pub fn generate_phantom(spec: &PhantomSpec) -> Result<PhaseImage> {
    spec.validate()?;
    let n = spec.size;
    let (lo, hi) = spec.phase_range;
    let mask = match spec.kind {
        PhantomKind::SiemensStar => siemens_star(n),
        PhantomKind::BinaryBlobs => binary_blobs(n, spec.seed),
        PhantomKind::BarTarget => bar_target(n),
        PhantomKind::SmoothBumps => smooth_bumps(n, spec.seed),
        PhantomKind::TextMask => text_mask(n),
    };
    // `mask` is in [0, 1]; map onto the requested phase range.
    let values = mask.mapv(|m| lo + m * (hi - lo));
    PhaseImage::new(values)
}

/// Binary star of alternating spokes between a central hub and an outer rim.
fn siemens_star(n: usize) -> Array2<f64> {
    const SPOKES: f64 = 16.0;
    let center = (n as f64 - 1.0) / 2.0;
    let radius = 0.45 * n as f64;
    let hub = 0.06 * n as f64;
    Array2::from_shape_fn((n, n), |(r, c)| {
        let dy = r as f64 - center;
        let dx = c as f64 - center;
        let rad = dx.hypot(dy);
        if rad > radius || rad < hub {
            return 0.0;
        }
        let theta = dy.atan2(dx);
        if (SPOKES * theta).sin() >= 0.0 {
            1.0
        } else {
            0.0
        }
    })
}

/// Random binary blobs: a coarse Gaussian field, bilinearly upsampled and
/// thresholded at its median so both classes are present.
fn binary_blobs(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse_n = (n / 24).max(4);
    let mut coarse = Array2::from_shape_fn((coarse_n, coarse_n), |_| {
        rng.gen_range(-1.0f64..1.0)
    });
    // A couple of box-blur passes round the blob boundaries.
    for _ in 0..2 {
        let src = coarse.clone();
        for r in 0..coarse_n {
            for c in 0..coarse_n {
                let mut acc = 0.0;
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let rr = (r as i64 + dr).rem_euclid(coarse_n as i64) as usize;
                        let cc = (c as i64 + dc).rem_euclid(coarse_n as i64) as usize;
                        acc += src[(rr, cc)];
                    }
                }
                coarse[(r, c)] = acc / 9.0;
            }
        }
    }
    let fine = bilinear_upsample(&coarse, n);
    let mut sorted: Vec<f64> = fine.iter().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    fine.mapv(|v| if v > median { 1.0 } else { 0.0 })
}

fn bilinear_upsample(coarse: &Array2<f64>, n: usize) -> Array2<f64> {
    let (ch, cw) = coarse.dim();
    Array2::from_shape_fn((n, n), |(r, c)| {
        let fy = r as f64 / n as f64 * ch as f64;
        let fx = c as f64 / n as f64 * cw as f64;
        let (y0, x0) = (fy.floor() as usize % ch, fx.floor() as usize % cw);
        let (y1, x1) = ((y0 + 1) % ch, (x0 + 1) % cw);
        let (wy, wx) = (fy.fract(), fx.fract());
        coarse[(y0, x0)] * (1.0 - wy) * (1.0 - wx)
            + coarse[(y0, x1)] * (1.0 - wy) * wx
            + coarse[(y1, x0)] * wy * (1.0 - wx)
            + coarse[(y1, x1)] * wy * wx
    })
}

/// Bands of square-wave bars with decreasing period; the upper half is
/// vertical bars, the lower half horizontal.
fn bar_target(n: usize) -> Array2<f64> {
    let periods = [n / 8, n / 12, n / 16, n / 22, n / 30];
    let bands = periods.len();
    let band_h = n / (2 * bands);
    let mut out = Array2::zeros((n, n));
    if band_h == 0 {
        return out;
    }
    let margin = n / 16;
    for (b, &p) in periods.iter().enumerate() {
        let p = p.max(2);
        for r in b * band_h..((b + 1) * band_h).min(n / 2) {
            for c in margin..n - margin {
                if (c - margin) % p < p / 2 {
                    out[(r, c)] = 1.0;
                }
            }
        }
        for c in (n / 2 + b * band_h)..(n / 2 + (b + 1) * band_h).min(n) {
            for r in margin..n - margin {
                if (r - margin) % p < p / 2 {
                    out[(r, c)] = 1.0;
                }
            }
        }
    }
    out
}

/// Sum of random Gaussian bumps, rescaled to [0, 1].
fn smooth_bumps(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps = 12;
    let params: Vec<(f64, f64, f64, f64)> = (0..bumps)
        .map(|_| {
            let cy = rng.gen_range(0.1..0.9) * n as f64;
            let cx = rng.gen_range(0.1..0.9) * n as f64;
            let sigma = rng.gen_range(0.04..0.12) * n as f64;
            let amp = rng.gen_range(0.3..1.0);
            (cy, cx, sigma, amp)
        })
        .collect();
    let mut out = Array2::from_shape_fn((n, n), |(r, c)| {
        params
            .iter()
            .map(|&(cy, cx, sigma, amp)| {
                let d2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
                amp * (-d2 / (2.0 * sigma * sigma)).exp()
            })
            .sum::<f64>()
    });
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = out.iter().copied().fold(f64::INFINITY, f64::min);
    if max > min {
        out.mapv_inplace(|v| (v - min) / (max - min));
    } else {
        out.fill(0.0);
    }
    out
}

/// 5x7 block-letter glyphs for the rendered text.
const TEXT: &str = "PHASE";

fn glyph(ch: char) -> [&'static str; 7] {
    match ch {
        'P' => ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."],
        'H' => ["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
        'A' => [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"],
        'S' => [".####", "#....", "#....", ".###.", "....#", "....#", "####."],
        'E' => ["#####", "#....", "#....", "####.", "#....", "#....", "#####"],
        _ => ["     "; 7],
    }
}

fn text_mask(n: usize) -> Array2<f64> {
    let mut out = Array2::zeros((n, n));
    let chars: Vec<char> = TEXT.chars().collect();
    // Each glyph cell is 6 columns wide (5 + 1 spacing) and 7 rows tall.
    let cols = chars.len() * 6 - 1;
    let scale = (n / (cols + 4)).max(1);
    let x0 = n.saturating_sub(cols * scale) / 2;
    let y0 = n.saturating_sub(7 * scale) / 2;
    for (gi, &ch) in chars.iter().enumerate() {
        let rows = glyph(ch);
        for (gr, row) in rows.iter().enumerate() {
            for (gc, cell) in row.chars().enumerate() {
                if cell != '#' {
                    continue;
                }
                let base_r = y0 + gr * scale;
                let base_c = x0 + (gi * 6 + gc) * scale;
                for r in base_r..(base_r + scale).min(n) {
                    for c in base_c..(base_c + scale).min(n) {
                        out[(r, c)] = 1.0;
                    }
                }
            }
        }
    }
    out
}
