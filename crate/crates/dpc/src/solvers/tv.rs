//! Total-variation baseline on the same splitting machinery as the
//! sparsity solver, with the first-order forward-difference gradient in
//! place of the second-derivative operator and no sparsity term.

use super::operator::{gradient_apply, soft_threshold_array};
use super::{DpcStack, SolveOutput, SpectralCore, TvConfig};
use crate::error::Result;
use crate::phantom::PhaseImage;
use ndarray::Array2;
use num_complex::Complex;

/// Alternate the auxiliary gradient field (soft threshold at `alpha / beta0`)
/// with the exact quadratic phi-solve, growing `beta0` geometrically.
pub fn tv_reconstruct(stack: &DpcStack, cfg: &TvConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    let core = SpectralCore::new(stack);
    let (h, w) = (core.h, core.w);
    let mut num_data = Array2::<Complex<f64>>::zeros((h, core.hw));
    for (t, s) in core.tf.iter().zip(core.s_hat.iter()) {
        for (acc, (tv, sv)) in num_data.iter_mut().zip(t.iter().zip(s.iter())) {
            *acc += tv.conj() * sv;
        }
    }

    let mut phi = Array2::<f64>::zeros((h, w));
    let mut trace = Vec::new();
    let mut steps = 0usize;
    let mut phi_hat = core.dft.forward(&phi);

    const MAX_SWEEPS: usize = 8;
    let mut beta0 = cfg.beta0_init;
    while beta0 < cfg.beta_max {
        for _ in 0..MAX_SWEEPS {
            let (dx, dy) = gradient_apply(&phi);
            let dx = soft_threshold_array(&dx, cfg.alpha / beta0);
            let dy = soft_threshold_array(&dy, cfg.alpha / beta0);
            let dx_hat = core.dft.forward(&dx);
            let dy_hat = core.dft.forward(&dy);

            let mut next = num_data.clone();
            for (acc, ((gx, gy), (dxv, dyv))) in next.iter_mut().zip(
                core.grad[0]
                    .iter()
                    .zip(core.grad[1].iter())
                    .zip(dx_hat.iter().zip(dy_hat.iter())),
            ) {
                *acc += beta0 * (gx.conj() * dxv + gy.conj() * dyv);
            }
            for (v, (h2, g2)) in next.iter_mut().zip(core.sum_h2.iter().zip(core.grad_abs2.iter())) {
                let den = h2 + beta0 * g2;
                *v = if den == 0.0 { Complex::new(0.0, 0.0) } else { *v / den };
            }
            let phi_new = core.dft.inverse(&next);
            steps += 1;

            let change = phi_new
                .iter()
                .zip(phi.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = phi_new.iter().map(|v| v * v).sum::<f64>().sqrt();
            phi = phi_new;
            phi_hat = next;
            if change <= cfg.inner_tol * scale.max(1e-300) {
                break;
            }
        }
        trace.push(core.residual(&phi_hat));
        beta0 *= cfg.growth;
    }

    Ok(SolveOutput { phase: PhaseImage::new(phi)?, trace, steps })
}
