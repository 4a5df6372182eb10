//! Linear forward model: phase to DPC contrast, raw oblique-illumination
//! pairs, and calibrated Gaussian noise injection.

use crate::error::{DpcError, Result};
use crate::fft::RealDft;
use crate::optics::TransferFunction;
use crate::phantom::PhaseImage;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// A differential phase contrast image (dimensionless contrast).
#[derive(Debug, Clone, PartialEq)]
pub struct DpcImage {
    pub values: Array2<f64>,
    pub axis: String,
}

impl DpcImage {
    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }
}

/// Intensity pair captured under mirrored oblique illumination.
#[derive(Debug, Clone)]
pub struct RawImagePair {
    pub i_pos: Array2<f64>,
    pub i_neg: Array2<f64>,
    pub axis: String,
    /// Pixels clamped to zero because the linearized contrast fell below -1.
    pub clamped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Gaussian with sigma = level * (max - min) of the image.
    RangeFraction,
    /// Gaussian with sigma = rms(image - mean) / 10^(level / 20).
    SnrDb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mode: NoiseMode,
    pub level: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(mode: NoiseMode, level: f64, seed: u64) -> Result<Self> {
        let spec = Self { mode, level, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            NoiseMode::RangeFraction if !(self.level >= 0.0) => Err(DpcError::Config(
                format!("range-fraction noise level must be >= 0, got {}", self.level),
            )),
            NoiseMode::SnrDb if !self.level.is_finite() => {
                Err(DpcError::Config("snr-db noise level must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Apply a transfer function to a phase map: `s = IDFT[H * DFT(phi)]`.
pub fn simulate_dpc(phase: &PhaseImage, tf: &TransferFunction) -> Result<DpcImage> {
    if phase.dim() != tf.dim() {
        return Err(DpcError::DimensionMismatch { expected: tf.dim(), actual: phase.dim() });
    }
    let (h, w) = phase.dim();
    let dft = RealDft::new(h, w);
    let mut spec = dft.forward(&phase.values);
    let hw = dft.half_width();
    for r in 0..h {
        for c in 0..hw {
            spec[(r, c)] *= tf.values[(r, c)];
        }
    }
    Ok(DpcImage { values: dft.inverse(&spec), axis: tf.axis.clone() })
}

/// Simulate the two raw intensity images of one axis under the weak-phase
/// linearization `I = 1 + IDFT[H_single * DFT(phi)]`, each side driven by its
/// own single-half-source transfer function. Negative intensities are clamped
/// to zero and counted.
pub fn simulate_raw_pair(
    phase: &PhaseImage,
    tf_pos: &TransferFunction,
    tf_neg: &TransferFunction,
) -> Result<RawImagePair> {
    let pos = simulate_dpc(phase, tf_pos)?;
    let neg = simulate_dpc(phase, tf_neg)?;
    let mut clamped = 0usize;
    let mut clamp = |contrast: &Array2<f64>| {
        contrast.mapv(|v| {
            let i = 1.0 + v;
            if i < 0.0 {
                clamped += 1;
                0.0
            } else {
                i
            }
        })
    };
    let i_pos = clamp(&pos.values);
    let i_neg = clamp(&neg.values);
    Ok(RawImagePair { i_pos, i_neg, axis: tf_pos.axis.clone(), clamped })
}

/// Normalized difference `(I+ - I-) / (I+ + I-)` of a raw pair.
pub fn compose_dpc(pair: &RawImagePair) -> Result<DpcImage> {
    if pair.i_pos.dim() != pair.i_neg.dim() {
        return Err(DpcError::DimensionMismatch {
            expected: pair.i_pos.dim(),
            actual: pair.i_neg.dim(),
        });
    }
    let degenerate = pair
        .i_pos
        .iter()
        .zip(pair.i_neg.iter())
        .filter(|(a, b)| **a + **b <= 0.0)
        .count();
    if degenerate > 0 {
        return Err(DpcError::DegenerateDivision { count: degenerate });
    }
    let values = Array2::from_shape_fn(pair.i_pos.dim(), |idx| {
        (pair.i_pos[idx] - pair.i_neg[idx]) / (pair.i_pos[idx] + pair.i_neg[idx])
    });
    Ok(DpcImage { values, axis: pair.axis.clone() })
}

/// Zero every frequency component with `|k| > radius` (cycles per micrometer).
///
/// Handy for building targets confined to the transfer band, where a
/// noise-free round trip through the forward model is fully invertible.
pub fn low_pass(
    phase: &PhaseImage,
    grid: &crate::optics::FrequencyGrid,
    radius: f64,
) -> Result<PhaseImage> {
    if phase.dim() != grid.dim() {
        return Err(DpcError::DimensionMismatch { expected: grid.dim(), actual: phase.dim() });
    }
    let (h, w) = phase.dim();
    let dft = RealDft::new(h, w);
    let mut spec = dft.forward(&phase.values);
    let hw = dft.half_width();
    for r in 0..h {
        for c in 0..hw {
            if grid.radius(r, c) > radius {
                spec[(r, c)] = num_complex::Complex::new(0.0, 0.0);
            }
        }
    }
    PhaseImage::new(dft.inverse(&spec))
}

/// Smooth random background field: the low-order illumination residue that
/// survives the normalized subtraction when the two raw images are lit
/// unevenly. A coarse random grid, bilinearly upsampled, mean-removed, and
/// scaled to the requested rms. Deterministic per seed.
pub fn low_order_background(dim: (usize, usize), rms: f64, seed: u64) -> Array2<f64> {
    let (h, w) = dim;
    if rms == 0.0 {
        return Array2::zeros((h, w));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coarse = Array2::from_shape_fn((4, 4), |_| rng.gen_range(-1.0f64..1.0));
    let mut field = Array2::from_shape_fn((h, w), |(r, c)| {
        // Bilinear sample of the coarse grid, clamped at the borders.
        let fy = r as f64 / h as f64 * 3.0;
        let fx = c as f64 / w as f64 * 3.0;
        let (y0, x0) = (fy.floor() as usize, fx.floor() as usize);
        let (y1, x1) = ((y0 + 1).min(3), (x0 + 1).min(3));
        let (wy, wx) = (fy.fract(), fx.fract());
        coarse[(y0, x0)] * (1.0 - wy) * (1.0 - wx)
            + coarse[(y0, x1)] * (1.0 - wy) * wx
            + coarse[(y1, x0)] * wy * (1.0 - wx)
            + coarse[(y1, x1)] * wy * wx
    });
    let mean = field.mean().unwrap();
    field.mapv_inplace(|v| v - mean);
    let current = (field.mapv(|v| v * v).mean().unwrap()).sqrt();
    if current > 0.0 {
        field.mapv_inplace(|v| v * rms / current);
    }
    field
}

/// Add i.i.d. Gaussian noise per the spec; deterministic for a given seed.
pub fn add_noise(image: &Array2<f64>, spec: &NoiseSpec) -> Array2<f64> {
    let sigma = match spec.mode {
        NoiseMode::RangeFraction => {
            let max = image.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = image.iter().copied().fold(f64::INFINITY, f64::min);
            spec.level * (max - min)
        }
        NoiseMode::SnrDb => {
            let mean = image.mean().unwrap_or(0.0);
            let rms = (image.mapv(|v| (v - mean).powi(2)).mean().unwrap_or(0.0)).sqrt();
            rms / 10f64.powf(spec.level / 20.0)
        }
    };
    if sigma == 0.0 {
        return image.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    image.mapv(|v| v + normal.sample(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{
        compute_ptf, make_frequency_grid, make_pupil, make_source_pair, Direction, OpticalConfig,
        SourceGeometry, SourceMask,
    };
    use crate::phantom::{generate_phantom, PhantomKind, PhantomSpec};
    use ndarray::Array2;

    fn setup(n: usize) -> (OpticalConfig, TransferFunction) {
        let cfg = OpticalConfig::new(0.530, 0.3, 10.0, 3.46, n, n).unwrap();
        let grid = make_frequency_grid(&cfg).unwrap();
        let pupil = make_pupil(&grid, &cfg).unwrap();
        let (pos, neg) =
            make_source_pair(&grid, &cfg, Direction::Top, SourceGeometry::HalfDisc).unwrap();
        let tf = compute_ptf(&grid, &pupil, &pos, &neg).unwrap();
        (cfg, tf)
    }

    /// Single-sided transfer functions: each half source against an empty
    /// mirror, through the same construction.
    fn single_sided(n: usize) -> (TransferFunction, TransferFunction, TransferFunction) {
        let cfg = OpticalConfig::new(0.530, 0.3, 10.0, 3.46, n, n).unwrap();
        let grid = make_frequency_grid(&cfg).unwrap();
        let pupil = make_pupil(&grid, &cfg).unwrap();
        let (pos, neg) =
            make_source_pair(&grid, &cfg, Direction::Top, SourceGeometry::HalfDisc).unwrap();
        let empty = |of: &SourceMask| SourceMask {
            values: Array2::zeros(grid.dim()),
            direction: of.direction.opposite(),
            geometry: of.geometry,
        };
        let tf_pair = compute_ptf(&grid, &pupil, &pos, &neg).unwrap();
        let tf_pos = compute_ptf(&grid, &pupil, &pos, &empty(&pos)).unwrap();
        // Mirrored side: the lone source sits in the "negative" slot.
        let tf_neg = compute_ptf(&grid, &pupil, &neg, &empty(&neg)).unwrap();
        (tf_pair, tf_pos, tf_neg)
    }

    #[test]
    fn constant_phase_gives_zero_contrast() {
        let (_, tf) = setup(32);
        let phase = PhaseImage::new(Array2::from_elem((32, 32), 0.7)).unwrap();
        let dpc = simulate_dpc(&phase, &tf).unwrap();
        let max = dpc.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(max < 1e-10 * 0.7);
    }

    #[test]
    fn simulate_dpc_is_linear() {
        let (_, tf) = setup(32);
        let phi = PhaseImage::new(Array2::from_shape_fn((32, 32), |(r, c)| {
            ((r as f64 * 0.3).sin() + (c as f64 * 0.7).cos()) * 0.1
        }))
        .unwrap();
        let doubled = PhaseImage::new(phi.values.mapv(|v| 2.0 * v)).unwrap();
        let s1 = simulate_dpc(&phi, &tf).unwrap();
        let s2 = simulate_dpc(&doubled, &tf).unwrap();
        let scale = s1.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in s1.values.iter().zip(s2.values.iter()) {
            assert!((b - 2.0 * a).abs() <= 1e-12 * scale.max(1e-300));
        }
    }

    #[test]
    fn impulse_response_is_the_kernel() {
        let (_, tf) = setup(32);
        let kernel = crate::optics::kernel_from_ptf(&tf).unwrap();
        let mut values = Array2::zeros((32, 32));
        values[(5, 9)] = 1.0;
        let dpc = simulate_dpc(&PhaseImage::new(values).unwrap(), &tf).unwrap();
        // Circular convolution with an impulse at (5, 9) shifts the kernel.
        let max = kernel.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..32 {
            for c in 0..32 {
                let expect = kernel.values[((r + 32 - 5) % 32, (c + 32 - 9) % 32)];
                assert!((dpc.values[(r, c)] - expect).abs() <= 1e-8 * max);
            }
        }
    }

    #[test]
    fn zero_phase_raw_pair_is_unit_background() {
        let (_, tf_pos, tf_neg) = single_sided(16);
        let phase = PhaseImage::new(Array2::zeros((16, 16))).unwrap();
        let pair = simulate_raw_pair(&phase, &tf_pos, &tf_neg).unwrap();
        assert!(pair.i_pos.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        assert!(pair.i_neg.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        assert_eq!(pair.clamped, 0);
    }

    #[test]
    fn composed_raw_pair_matches_pair_transfer_at_weak_phase() {
        let (tf_pair, tf_pos, tf_neg) = single_sided(64);
        let spec = PhantomSpec::new(PhantomKind::SmoothBumps, 64, (0.0, 0.1), 5);
        let phase = generate_phantom(&spec).unwrap();
        let pair = simulate_raw_pair(&phase, &tf_pos, &tf_neg).unwrap();
        assert_eq!(pair.clamped, 0);
        let composed = compose_dpc(&pair).unwrap();
        let direct = simulate_dpc(&phase, &tf_pair).unwrap();
        let range = direct.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
            - direct.values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
        let max_dev = composed
            .values
            .iter()
            .zip(direct.values.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(max_dev <= 0.05 * range, "max_dev={max_dev:e}, range={range:e}");
    }

    #[test]
    fn compose_rejects_zero_sum_pixels() {
        let pair = RawImagePair {
            i_pos: Array2::zeros((4, 4)),
            i_neg: Array2::zeros((4, 4)),
            axis: "top-bottom".into(),
            clamped: 0,
        };
        match compose_dpc(&pair) {
            Err(DpcError::DegenerateDivision { count }) => assert_eq!(count, 16),
            other => panic!("expected degenerate division, got {other:?}"),
        }
    }

    #[test]
    fn compose_arithmetic() {
        let pair = RawImagePair {
            i_pos: Array2::from_elem((2, 2), 2.0),
            i_neg: Array2::from_elem((2, 2), 1.0),
            axis: "left-right".into(),
            clamped: 0,
        };
        let s = compose_dpc(&pair).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));

        let equal = RawImagePair { i_neg: pair.i_pos.clone(), ..pair };
        let z = compose_dpc(&equal).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_sigma_is_identity() {
        let img = Array2::from_shape_fn((16, 16), |(r, c)| (r + 2 * c) as f64);
        let spec = NoiseSpec::new(NoiseMode::RangeFraction, 0.0, 1).unwrap();
        assert_eq!(add_noise(&img, &spec), img);

        // A constant image has zero signal rms, so snr-db noise is also zero.
        let constant = Array2::from_elem((16, 16), 3.5);
        let spec = NoiseSpec::new(NoiseMode::SnrDb, 20.0, 1).unwrap();
        assert_eq!(add_noise(&constant, &spec), constant);
    }

    #[test]
    fn noise_sigma_tracks_the_spec() {
        let img = Array2::from_shape_fn((512, 512), |(r, c)| {
            if (r / 13 + c / 7) % 2 == 0 {
                1.0
            } else {
                0.0
            }
        });
        let spec = NoiseSpec::new(NoiseMode::RangeFraction, 0.2, 42).unwrap();
        let noisy = add_noise(&img, &spec);
        let diff = &noisy - &img;
        let sigma = (diff.mapv(|v| v * v).mean().unwrap()).sqrt();
        assert!((sigma - 0.2).abs() / 0.2 <= 0.02, "sigma={sigma}");

        // 20 dB SNR on a zero-mean unit-rms image: sigma = 0.1.
        let mut signal = Array2::from_shape_fn((512, 512), |(r, c)| {
            ((r as f64 * 0.11).sin() * (c as f64 * 0.07).cos()) * std::f64::consts::SQRT_2
        });
        let mean = signal.mean().unwrap();
        signal.mapv_inplace(|v| v - mean);
        let rms = (signal.mapv(|v| v * v).mean().unwrap()).sqrt();
        signal.mapv_inplace(|v| v / rms);
        let spec = NoiseSpec::new(NoiseMode::SnrDb, 20.0, 43).unwrap();
        let noisy = add_noise(&signal, &spec);
        let diff = &noisy - &signal;
        let sigma = (diff.mapv(|v| v * v).mean().unwrap()).sqrt();
        assert!((sigma - 0.1).abs() / 0.1 <= 0.02, "sigma={sigma}");
    }

    #[test]
    fn background_field_is_smooth_zero_mean_and_scaled() {
        let field = low_order_background((128, 128), 0.05, 7);
        assert!(field.mean().unwrap().abs() < 1e-12);
        let rms = (field.mapv(|v| v * v).mean().unwrap()).sqrt();
        assert!((rms - 0.05).abs() < 1e-12);
        assert_eq!(field, low_order_background((128, 128), 0.05, 7));
        // Low-order: neighboring samples stay close.
        for r in 0..127 {
            for c in 0..127 {
                assert!((field[(r, c)] - field[(r + 1, c + 1)]).abs() < 0.02);
            }
        }
        assert!(low_order_background((32, 32), 0.0, 1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let img = Array2::from_shape_fn((32, 32), |(r, c)| (r * c) as f64 * 0.01);
        let spec = NoiseSpec::new(NoiseMode::RangeFraction, 0.1, 99).unwrap();
        assert_eq!(add_noise(&img, &spec), add_noise(&img, &spec));
        let other = NoiseSpec::new(NoiseMode::RangeFraction, 0.1, 100).unwrap();
        assert_ne!(add_noise(&img, &spec), add_noise(&img, &other));
    }

    #[test]
    fn dc_offset_of_phase_is_annihilated() {
        let (_, tf) = setup(32);
        let phi = generate_phantom(&PhantomSpec::new(PhantomKind::SmoothBumps, 32, (0.0, 1.0), 2)).unwrap();
        let shifted = PhaseImage::new(phi.values.mapv(|v| v + 5.0)).unwrap();
        let a = simulate_dpc(&phi, &tf).unwrap();
        let b = simulate_dpc(&shifted, &tf).unwrap();
        let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            assert!((x - y).abs() <= 1e-10 * scale);
        }
    }
}
