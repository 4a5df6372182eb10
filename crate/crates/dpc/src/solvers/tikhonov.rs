//! Closed-form L2-regularized deconvolution.

use super::{DpcStack, SolveOutput, SpectralCore, TikhonovConfig};
use crate::error::{DpcError, Result};
use crate::phantom::PhaseImage;
use ndarray::Array2;
use num_complex::Complex;

/// `phi = IDFT[ sum_n conj(H_n) S_n / (sum_n |H_n|^2 + alpha) ]`.
///
/// The numerator vanishes at DC because every `H_n(0) = 0`, so the output has
/// zero spatial mean for any `alpha > 0`.
pub fn tikhonov_reconstruct(stack: &DpcStack, cfg: &TikhonovConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    let core = SpectralCore::new(stack);
    solve_with_core(&core, cfg)
}

pub(crate) fn solve_with_core(core: &SpectralCore, cfg: &TikhonovConfig) -> Result<SolveOutput> {
    if cfg.alpha == 0.0 && core.sum_h2.iter().any(|&v| v == 0.0) {
        return Err(DpcError::SingularSystem(
            "alpha = 0 with vanishing transfer spectrum (the DC sample is always zero); \
             use a positive alpha"
                .into(),
        ));
    }
    let mut phi_hat = Array2::<Complex<f64>>::zeros((core.h, core.hw));
    for (t, s) in core.tf.iter().zip(core.s_hat.iter()) {
        for (acc, (tv, sv)) in phi_hat.iter_mut().zip(t.iter().zip(s.iter())) {
            *acc += tv.conj() * sv;
        }
    }
    for (v, d) in phi_hat.iter_mut().zip(core.sum_h2.iter()) {
        *v /= d + cfg.alpha;
    }
    let residual = core.residual(&phi_hat);
    let phase = PhaseImage::new(core.dft.inverse(&phi_hat))?;
    Ok(SolveOutput { phase, trace: vec![residual], steps: 1 })
}
