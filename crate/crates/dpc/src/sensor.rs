//! Adaptive noise sensor.
//!
//! The noise level of a DPC stack is estimated from the mean absolute
//! response to the 3x3 operator
//!
//! ```text
//! L = [-1  2 -1]
//!     [-2  4 -2]        A = (1/20) sqrt(pi/2) (1/N) (1/(W H)) sum_n sum_xy |s_n (x) L|
//!     [-1  2 -1]
//! ```
//!
//! and the penalty weights follow as `alpha = A`, `beta = A / 2`. The kernel
//! annihilates constants and linear ramps, and on pure i.i.d. Gaussian noise
//! of deviation sigma the estimate approaches `0.3 sigma`
//! (`E|n (x) L| = sigma ||L||_2 sqrt(2/pi)` with `||L||_2 = 6`).
//!
//! The kernel, the 1/20 constant, and the division by the full pixel count
//! (zero-padded boundary) are kept exactly as stated; the downstream weights
//! are calibrated to this estimator, not to a corrected variant of it.

use crate::forward::DpcImage;
use crate::solvers::DpcStack;
use ndarray::Array2;

/// The fixed 3x3 operator; symmetric under 180-degree rotation, so
/// convolution and correlation coincide.
const LAPLACIAN: [[f64; 3]; 3] = [[-1.0, 2.0, -1.0], [-2.0, 4.0, -2.0], [-1.0, 2.0, -1.0]];

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEstimate {
    /// Stack noise level: mean of the per-image contributions.
    pub a: f64,
    pub per_image: Vec<f64>,
}

/// Penalty weights derived from a noise estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub alpha: f64,
    pub beta: f64,
    /// True when `A = 0` left both weights zero; regularization is disabled.
    pub disabled: bool,
}

/// Noise-level contribution of a single image.
///
/// The response is evaluated where the 3x3 kernel fully fits and is zero on
/// the one-pixel border (a truncated kernel no longer sums to zero, which
/// would break the exact null response to constants); the normalization
/// stays the full `W * H` rather than the interior count.
pub fn image_noise_level(image: &Array2<f64>) -> f64 {
    let (h, w) = image.dim();
    let mut acc = 0.0;
    if h >= 3 && w >= 3 {
        for r in 1..h - 1 {
            for c in 1..w - 1 {
                let mut conv = 0.0;
                for (dr, row) in LAPLACIAN.iter().enumerate() {
                    for (dc, &k) in row.iter().enumerate() {
                        conv += k * image[(r + dr - 1, c + dc - 1)];
                    }
                }
                acc += conv.abs();
            }
        }
    }
    0.05 * (std::f64::consts::PI / 2.0).sqrt() * acc / (w * h) as f64
}

/// Estimate the noise level of a stack's images.
pub fn estimate_noise(stack: &DpcStack) -> NoiseEstimate {
    estimate_noise_images(&stack.images)
}

pub fn estimate_noise_images(images: &[DpcImage]) -> NoiseEstimate {
    let per_image: Vec<f64> = images.iter().map(|img| image_noise_level(&img.values)).collect();
    let a = per_image.iter().sum::<f64>() / per_image.len().max(1) as f64;
    NoiseEstimate { a, per_image }
}

/// `alpha = A`, `beta = A / 2`.
pub fn auto_params(estimate: &NoiseEstimate) -> PenaltyParams {
    auto_params_with_beta(estimate, None)
}

/// Same, with an optional manual beta override.
pub fn auto_params_with_beta(estimate: &NoiseEstimate, beta_override: Option<f64>) -> PenaltyParams {
    let alpha = estimate.a;
    let beta = beta_override.unwrap_or(alpha / 2.0);
    PenaltyParams { alpha, beta, disabled: alpha == 0.0 && beta == 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{add_noise, simulate_dpc, NoiseMode, NoiseSpec};
    use crate::optics::{
        compute_ptf, make_frequency_grid, make_pupil, make_source_pair, Direction, OpticalConfig,
        SourceGeometry,
    };
    use crate::phantom::{generate_phantom, PhantomKind, PhantomSpec};
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn image(values: Array2<f64>) -> DpcImage {
        DpcImage { values, axis: "test".into() }
    }

    #[test]
    fn constants_give_zero() {
        let est = estimate_noise_images(&[image(Array2::from_elem((64, 64), 3.0))]);
        assert_eq!(est.a, 0.0);
    }

    #[test]
    fn interior_response_to_ramps_is_zero() {
        // The kernel annihilates degree-1 polynomials away from the border.
        let ramp = Array2::from_shape_fn((32, 32), |(r, c)| 0.3 * r as f64 - 0.7 * c as f64 + 2.0);
        let (h, w) = ramp.dim();
        for r in 1..h - 1 {
            for c in 1..w - 1 {
                let mut conv = 0.0;
                for (dr, row) in LAPLACIAN.iter().enumerate() {
                    for (dc, &k) in row.iter().enumerate() {
                        conv += k * ramp[(r + dr - 1, c + dc - 1)];
                    }
                }
                assert!(conv.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gaussian_noise_reads_point_three_sigma() {
        let sigma = 0.05;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        let normal = Normal::new(0.0, sigma).unwrap();
        let noise = Array2::from_shape_fn((512, 512), |_| normal.sample(&mut rng));
        let est = estimate_noise_images(&[image(noise)]);
        let expected = 0.3 * sigma;
        assert!(
            (est.a - expected).abs() <= 0.03 * expected,
            "A = {}, expected {expected}",
            est.a
        );
    }

    #[test]
    fn estimate_is_scale_equivariant() {
        let img = Array2::from_shape_fn((48, 48), |(r, c)| ((r * 7 + c * 3) % 11) as f64 * 0.1);
        let base = estimate_noise_images(&[image(img.clone())]).a;
        let scaled = estimate_noise_images(&[image(img.mapv(|v| 3.5 * v))]).a;
        assert!((scaled - 3.5 * base).abs() <= 1e-12 * scaled.abs().max(1.0));
    }

    #[test]
    fn estimate_is_monotone_in_noise() {
        let phantom =
            generate_phantom(&PhantomSpec::new(PhantomKind::BinaryBlobs, 128, (0.0, 1.0), 5)).unwrap();
        let cfg = OpticalConfig::new(0.530, 0.3, 10.0, 3.46, 128, 128).unwrap();
        let grid = make_frequency_grid(&cfg).unwrap();
        let pupil = make_pupil(&grid, &cfg).unwrap();
        let (pos, neg) =
            make_source_pair(&grid, &cfg, Direction::Top, SourceGeometry::HalfDisc).unwrap();
        let tf = compute_ptf(&grid, &pupil, &pos, &neg).unwrap();
        let clean = simulate_dpc(&phantom, &tf).unwrap();
        for seed in 0..10u64 {
            let mut last = -1.0;
            for level in [0.0, 0.05, 0.1, 0.2] {
                let spec = NoiseSpec::new(NoiseMode::RangeFraction, level, seed).unwrap();
                let noisy = image(add_noise(&clean.values, &spec));
                let a = estimate_noise_images(&[noisy]).a;
                assert!(a >= last, "A not monotone at level {level}, seed {seed}");
                last = a;
            }
        }
    }

    /// Two-axis binary phantom in [0, 2] rad with 0.2-range-fraction noise on
    /// each DPC image reads close to the reference noise level 0.123.
    #[test]
    fn reference_scenario_noise_level() {
        let n = 600;
        let phantom =
            generate_phantom(&PhantomSpec::new(PhantomKind::BinaryBlobs, n, (0.0, 2.0), 1)).unwrap();
        let cfg = OpticalConfig::new(0.530, 0.3, 10.0, 3.46, n, n).unwrap();
        let grid = make_frequency_grid(&cfg).unwrap();
        let pupil = make_pupil(&grid, &cfg).unwrap();
        let mut images = Vec::new();
        for (i, dir) in [Direction::Top, Direction::Left].into_iter().enumerate() {
            let (pos, neg) = make_source_pair(&grid, &cfg, dir, SourceGeometry::HalfDisc).unwrap();
            let tf = compute_ptf(&grid, &pupil, &pos, &neg).unwrap();
            let clean = simulate_dpc(&phantom, &tf).unwrap();
            let spec = NoiseSpec::new(NoiseMode::RangeFraction, 0.2, 100 + i as u64).unwrap();
            images.push(image(add_noise(&clean.values, &spec)));
        }
        let est = estimate_noise_images(&images);
        let reference = 0.123;
        assert!(
            (est.a - reference).abs() <= 0.2 * reference,
            "A = {} outside 20% of {reference}",
            est.a
        );
    }

    #[test]
    fn params_follow_the_estimate() {
        let est = NoiseEstimate { a: 0.123, per_image: vec![0.123] };
        let params = auto_params(&est);
        assert_eq!(params.alpha, 0.123);
        assert_eq!(params.beta, 0.123 / 2.0);
        assert!(!params.disabled);

        let zero = auto_params(&NoiseEstimate { a: 0.0, per_image: vec![0.0] });
        assert_eq!((zero.alpha, zero.beta), (0.0, 0.0));
        assert!(zero.disabled);

        let manual = auto_params_with_beta(&NoiseEstimate { a: 0.1, per_image: vec![0.1] }, Some(0.2));
        assert_eq!((manual.alpha, manual.beta), (0.1, 0.2));
    }
}
