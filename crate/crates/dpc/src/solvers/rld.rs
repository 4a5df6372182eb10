//! Gradient-descent deconvolution with an exponential L0 surrogate and
//! adaptive momentum (Adam with a Nesterov-style lookahead numerator).
//!
//! The smooth cost is
//!
//! ```text
//! E(phi) = sum_n ||K_n phi - s_n||^2
//!        + alpha sum_n sum_x [1 - exp(-c |K_n phi|)]
//!        + beta  sum_c sum_x |(Hess phi)_c|
//! ```
//!
//! with every `|x|` smoothed as `sqrt(x^2 + eps^2)` so the gradient exists at
//! the origin. The surrogate's gradient grows like `c` near zero, which makes
//! plain gradient descent overshoot; the adaptive step normalizes it away.

use super::operator::{hessian_adjoint, hessian_apply};
use super::tikhonov;
use super::{DpcStack, RldConfig, SolveOutput, SpectralCore, TikhonovConfig};
use crate::error::{DpcError, Result};
use crate::phantom::PhaseImage;
use ndarray::Array2;
use num_complex::Complex;

/// Exponential surrogate `f(x) = 1 - exp(-c |x|)`, element-wise.
pub fn l0_surrogate(x: &Array2<f64>, c: f64) -> Array2<f64> {
    x.mapv(|v| 1.0 - (-c * v.abs()).exp())
}

/// Gradient of the surrogate with `|x| ~ sqrt(x^2 + eps^2)`:
/// `c exp(-c |x|) x / |x|`.
pub fn l0_surrogate_grad(x: &Array2<f64>, c: f64, eps_abs: f64) -> Array2<f64> {
    x.mapv(|v| {
        let sabs = (v * v + eps_abs * eps_abs).sqrt();
        c * (-c * sabs).exp() * v / sabs
    })
}

/// First/second-moment accumulators of the adaptive optimizer.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub m: Array2<f64>,
    pub v: Array2<f64>,
    /// Iteration counter, starting at 1; used for bias correction.
    pub t: usize,
}

impl OptimizerState {
    pub fn new(dim: (usize, usize)) -> Self {
        Self { m: Array2::zeros(dim), v: Array2::zeros(dim), t: 1 }
    }
}

/// One adaptive step:
///
/// ```text
/// m <- rho1 m + (1 - rho1) g        v <- rho2 v + (1 - rho2) g^2
/// m^ = m / (1 - rho1^t)             v^ = v / (1 - rho2^t)
/// phi <- phi - eta [rho1 m^ + (1 - rho1) g] / sqrt(v^ + xi)
/// ```
///
/// Advances the counter afterwards.
pub fn nadam_step(
    state: &mut OptimizerState,
    phi: &mut Array2<f64>,
    grad: &Array2<f64>,
    cfg: &RldConfig,
) {
    assert!(state.t >= 1, "optimizer counter starts at 1");
    let t = state.t as i32;
    let bias1 = 1.0 - cfg.rho1.powi(t);
    let bias2 = 1.0 - cfg.rho2.powi(t);
    for ((m, v), (p, g)) in state
        .m
        .iter_mut()
        .zip(state.v.iter_mut())
        .zip(phi.iter_mut().zip(grad.iter()))
    {
        *m = cfg.rho1 * *m + (1.0 - cfg.rho1) * g;
        *v = cfg.rho2 * *v + (1.0 - cfg.rho2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= cfg.eta * (cfg.rho1 * m_hat + (1.0 - cfg.rho1) * g) / (v_hat + cfg.xi).sqrt();
    }
    state.t += 1;
}

/// Cost and gradient of the smooth objective at `phi`.
pub fn rld_cost_and_gradient(
    phi: &PhaseImage,
    stack: &DpcStack,
    cfg: &RldConfig,
) -> Result<(f64, Array2<f64>)> {
    cfg.validate()?;
    if phi.dim() != stack.dim() {
        return Err(DpcError::DimensionMismatch { expected: stack.dim(), actual: phi.dim() });
    }
    let core = SpectralCore::new(stack);
    Ok(cost_and_gradient_with_core(&core, stack, &phi.values, cfg))
}

pub(crate) fn cost_and_gradient_with_core(
    core: &SpectralCore,
    stack: &DpcStack,
    phi: &Array2<f64>,
    cfg: &RldConfig,
) -> (f64, Array2<f64>) {
    let eps2 = cfg.eps_abs * cfg.eps_abs;
    let phi_hat = core.dft.forward(phi);
    let mut cost = 0.0;
    let mut grad_hat = Array2::<Complex<f64>>::zeros((core.h, core.hw));

    for (n, tf) in core.tf.iter().enumerate() {
        let mut spec = phi_hat.clone();
        for (v, t) in spec.iter_mut().zip(tf.iter()) {
            *v *= t;
        }
        let kphi = core.dft.inverse(&spec);
        let s = &stack.images[n].values;

        // Data term 2 K^T (K phi - s) and surrogate term in one spatial pass.
        let mut g_spatial = Array2::<f64>::zeros((core.h, core.w));
        for ((g, k), sv) in g_spatial.iter_mut().zip(kphi.iter()).zip(s.iter()) {
            let resid = k - sv;
            cost += resid * resid;
            let sabs = (k * k + eps2).sqrt();
            cost += cfg.alpha * (1.0 - (-cfg.c * sabs).exp());
            *g = 2.0 * resid + cfg.alpha * cfg.c * (-cfg.c * sabs).exp() * k / sabs;
        }
        let g_hat = core.dft.forward(&g_spatial);
        for (acc, (t, g)) in grad_hat.iter_mut().zip(tf.iter().zip(g_hat.iter())) {
            *acc += t.conj() * g;
        }
    }
    let mut grad = core.dft.inverse(&grad_hat);

    // Second-derivative L1 term and its subgradient, smoothed the same way.
    let field = hessian_apply(phi);
    let mut unit = field.clone();
    for comp in [&mut unit.xx, &mut unit.yy, &mut unit.xy] {
        for v in comp.iter_mut() {
            let sabs = (*v * *v + eps2).sqrt();
            cost += cfg.beta * sabs;
            *v /= sabs;
        }
    }
    let hess_term = hessian_adjoint(&unit);
    grad.zip_mut_with(&hess_term, |g, h| *g += cfg.beta * h);

    (cost, grad)
}

/// Full solve: L2-initialized (`alpha = 1`), then `t_max` adaptive steps.
///
/// The DC component of phi is unobservable (every `H_n(0) = 0`) and the cost
/// is invariant to it; the returned phase is mean-centered to fix the gauge.
pub fn rld_reconstruct(stack: &DpcStack, cfg: &RldConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    let core = SpectralCore::new(stack);
    let init = tikhonov::solve_with_core(&core, &TikhonovConfig { alpha: 1.0 })?;
    let mut phi = init.phase.values;
    let mut state = OptimizerState::new(phi.dim());
    let mut trace = Vec::with_capacity(cfg.t_max);

    for iteration in 1..=cfg.t_max {
        let (cost, grad) = cost_and_gradient_with_core(&core, stack, &phi, cfg);
        if !cost.is_finite() {
            return Err(DpcError::Divergence { iteration });
        }
        trace.push(cost);
        nadam_step(&mut state, &mut phi, &grad, cfg);
    }

    let mean = phi.mean().unwrap_or(0.0);
    phi.mapv_inplace(|v| v - mean);
    Ok(SolveOutput { phase: PhaseImage::new(phi)?, trace, steps: cfg.t_max })
}
