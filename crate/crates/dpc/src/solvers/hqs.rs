//! Half-quadratic splitting for the sparsity + second-derivative model.
//!
//! The cost
//!
//! ```text
//! sum_n ||K_n phi - s_n||^2 + alpha sum_n ||K_n phi||_0 + beta ||Hess phi||_1
//! ```
//!
//! splits into auxiliary fields `psi_n ~ K_n phi` (hard threshold) and
//! `G ~ Hess phi` (soft threshold), plus a quadratic phi-subproblem solved by
//! spectral division:
//!
//! ```text
//! phi = IDFT[ ( sum_n conj(H_n)(S_n + a0 Psi_n) + b0 conj(D) . G_hat )
//!             / ( (1 + a0) sum_n |H_n|^2 + b0 |D|^2 ) ]
//! ```
//!
//! Both couplings grow geometrically: starting from `a0 = alpha`, `b0 = beta`,
//! each loop runs `ceil(log_growth(cap / start))` trips.

use super::operator::{hessian_apply, soft_threshold_array, HessianField};
use super::{DpcStack, HqsConfig, SolveOutput, SpectralCore};
use crate::error::Result;
use crate::phantom::PhaseImage;
use ndarray::Array2;
use num_complex::Complex;

/// Auxiliary per-axis fields (`psi_n`, or the `K_n phi` they approximate).
#[derive(Debug, Clone)]
pub struct SparseField {
    pub fields: Vec<Array2<f64>>,
}

impl SparseField {
    pub fn dim(&self) -> (usize, usize) {
        self.fields[0].dim()
    }
}

/// Joint hard threshold: a pixel keeps all N values when the summed energy
/// `sum_n x_n^2` exceeds the threshold, otherwise all N are zeroed.
pub fn hqs_hard_threshold(fields: &SparseField, threshold: f64) -> SparseField {
    let (h, w) = fields.dim();
    let mut energy = Array2::<f64>::zeros((h, w));
    for f in &fields.fields {
        for (e, v) in energy.iter_mut().zip(f.iter()) {
            *e += v * v;
        }
    }
    let out = fields
        .fields
        .iter()
        .map(|f| {
            Array2::from_shape_fn((h, w), |idx| if energy[idx] > threshold { f[idx] } else { 0.0 })
        })
        .collect();
    SparseField { fields: out }
}

/// Element-wise soft threshold `sign(x) * max(|x| - t, 0)` of each component.
pub fn soft_threshold(field: &HessianField, threshold: f64) -> HessianField {
    HessianField {
        xx: soft_threshold_array(&field.xx, threshold),
        yy: soft_threshold_array(&field.yy, threshold),
        xy: soft_threshold_array(&field.xy, threshold),
    }
}

/// Solve the quadratic phi-subproblem for given auxiliaries.
///
/// The spectral denominator vanishes only where every operator does (DC);
/// there the numerator vanishes too and the quotient is defined as zero.
pub fn hqs_quadratic_solve(
    stack: &DpcStack,
    psi: &SparseField,
    g: &HessianField,
    alpha0: f64,
    beta0: f64,
) -> Result<PhaseImage> {
    let core = SpectralCore::new(stack);
    let psi_hat: Vec<_> = psi.fields.iter().map(|f| core.dft.forward(f)).collect();
    let g_hat = [
        core.dft.forward(&g.xx),
        core.dft.forward(&g.yy),
        core.dft.forward(&g.xy),
    ];
    let phi_hat = solve_with_core(&core, &psi_hat, &g_hat, alpha0, beta0);
    PhaseImage::new(core.dft.inverse(&phi_hat))
}

pub(crate) fn solve_with_core(
    core: &SpectralCore,
    psi_hat: &[Array2<Complex<f64>>],
    g_hat: &[Array2<Complex<f64>>; 3],
    alpha0: f64,
    beta0: f64,
) -> Array2<Complex<f64>> {
    let mut num = Array2::<Complex<f64>>::zeros((core.h, core.hw));
    for ((t, s), p) in core.tf.iter().zip(core.s_hat.iter()).zip(psi_hat.iter()) {
        for (acc, ((tv, sv), pv)) in num.iter_mut().zip(t.iter().zip(s.iter()).zip(p.iter())) {
            *acc += tv.conj() * (sv + alpha0 * pv);
        }
    }
    for (sym, g) in core.hess.iter().zip(g_hat.iter()) {
        for (acc, (dv, gv)) in num.iter_mut().zip(sym.iter().zip(g.iter())) {
            *acc += beta0 * dv.conj() * gv;
        }
    }
    for (v, (h2, d2)) in num.iter_mut().zip(core.sum_h2.iter().zip(core.hess_abs2.iter())) {
        let den = (1.0 + alpha0) * h2 + beta0 * d2;
        *v = if den == 0.0 { Complex::new(0.0, 0.0) } else { *v / den };
    }
    num
}

/// Full alternating schedule: psi per outer trip, (G, phi) per inner trip.
pub fn hqs_reconstruct(stack: &DpcStack, cfg: &HqsConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    let core = SpectralCore::new(stack);
    let (h, w) = (core.h, core.w);
    let mut phi = Array2::<f64>::from_elem((h, w), cfg.phi_init);
    let mut phi_hat = core.dft.forward(&phi);
    let mut trace = Vec::new();
    let mut steps = 0usize;

    let mut alpha0 = cfg.alpha;
    while alpha0 < cfg.alpha_max {
        let kphi = SparseField {
            fields: core
                .tf
                .iter()
                .map(|t| {
                    let mut spec = phi_hat.clone();
                    for (v, tv) in spec.iter_mut().zip(t.iter()) {
                        *v *= tv;
                    }
                    core.dft.inverse(&spec)
                })
                .collect(),
        };
        let psi = hqs_hard_threshold(&kphi, cfg.alpha / alpha0);
        let psi_hat: Vec<_> = psi.fields.iter().map(|f| core.dft.forward(f)).collect();

        let mut beta0 = cfg.beta;
        while beta0 < cfg.beta_max {
            let g = soft_threshold(&hessian_apply(&phi), cfg.beta / beta0);
            let g_hat = [
                core.dft.forward(&g.xx),
                core.dft.forward(&g.yy),
                core.dft.forward(&g.xy),
            ];
            phi_hat = solve_with_core(&core, &psi_hat, &g_hat, alpha0, beta0);
            phi = core.dft.inverse(&phi_hat);
            steps += 1;
            beta0 *= cfg.growth;
        }
        trace.push(core.residual(&phi_hat));
        alpha0 *= cfg.growth;
    }

    Ok(SolveOutput { phase: PhaseImage::new(phi)?, trace, steps })
}
