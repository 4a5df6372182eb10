//! Phase reconstruction solvers.
//!
//! All four methods minimize variants of
//!
//! ```text
//! E(phi) = sum_n ||K_n phi - s_n||^2 + regularization(phi)
//! ```
//!
//! over the same Fourier-diagonal operator core: `K_n` is circular
//! convolution with the kernel of the n-th transfer function, and the
//! first/second-difference operators use periodic boundaries so that every
//! quadratic subproblem is solved exactly by element-wise spectral division.

mod hqs;
mod operator;
mod rld;
#[cfg(test)]
pub(crate) mod test_support;
mod tikhonov;
mod tv;

pub use hqs::{hqs_hard_threshold, hqs_quadratic_solve, hqs_reconstruct, soft_threshold, SparseField};
pub use operator::{
    gradient_apply, gradient_adjoint, hessian_adjoint, hessian_apply, transfer_adjoint,
    transfer_apply, HessianField,
};
pub use rld::{
    l0_surrogate, l0_surrogate_grad, nadam_step, rld_cost_and_gradient, rld_reconstruct,
    OptimizerState,
};
pub use tikhonov::tikhonov_reconstruct;
pub use tv::tv_reconstruct;

pub(crate) use operator::SpectralCore;

use crate::error::{DpcError, Result};
use crate::forward::DpcImage;
use crate::optics::TransferFunction;
use crate::phantom::PhaseImage;

/// Measured DPC images paired with their transfer functions, index-aligned.
#[derive(Debug, Clone)]
pub struct DpcStack {
    pub images: Vec<DpcImage>,
    pub transfer_functions: Vec<TransferFunction>,
}

impl DpcStack {
    pub fn new(images: Vec<DpcImage>, transfer_functions: Vec<TransferFunction>) -> Result<Self> {
        if images.is_empty() || images.len() != transfer_functions.len() {
            return Err(DpcError::Config(format!(
                "stack needs N >= 1 aligned image/transfer pairs, got {} and {}",
                images.len(),
                transfer_functions.len()
            )));
        }
        let dims = images[0].dim();
        for img in &images {
            if img.dim() != dims {
                return Err(DpcError::DimensionMismatch { expected: dims, actual: img.dim() });
            }
            if img.values.iter().any(|v| !v.is_finite()) {
                return Err(DpcError::Config("stack image contains non-finite values".into()));
            }
        }
        for tf in &transfer_functions {
            if tf.dim() != dims {
                return Err(DpcError::DimensionMismatch { expected: dims, actual: tf.dim() });
            }
            tf.check_invariants()?;
        }
        Ok(Self { images, transfer_functions })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.images[0].dim()
    }
}

/// A reconstruction together with its convergence trace.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub phase: PhaseImage,
    /// Per-outer-iteration cost or data residual, solver-specific.
    pub trace: Vec<f64>,
    /// Total inner steps taken (quadratic solves or gradient iterations).
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TikhonovConfig {
    pub alpha: f64,
}

impl TikhonovConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = Self { alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(DpcError::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        Ok(())
    }
}

impl Default for TikhonovConfig {
    fn default() -> Self {
        Self { alpha: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvConfig {
    /// Weight of the gradient L1 penalty.
    pub alpha: f64,
    /// Initial quadratic coupling weight.
    pub beta0_init: f64,
    /// Coupling weight at which the schedule stops.
    pub beta_max: f64,
    /// Geometric growth factor of the coupling weight.
    pub growth: f64,
    /// Relative change of phi below which the sweep at one coupling stops.
    pub inner_tol: f64,
}

impl TvConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = Self { alpha, beta0_init: 0.1, beta_max: 1e5, growth: 2.0, inner_tol: 1e-3 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0
            && self.beta0_init > 0.0
            && self.beta_max > 0.0
            && self.inner_tol > 0.0)
        {
            return Err(DpcError::Config("tv parameters must be positive".into()));
        }
        if !(self.growth > 1.0) {
            return Err(DpcError::Config("growth factor must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HqsConfig {
    /// Weight of the sparsity (L0) penalty.
    pub alpha: f64,
    /// Weight of the second-derivative L1 penalty.
    pub beta: f64,
    /// Schedule cap for the sparsity coupling alpha0.
    pub alpha_max: f64,
    /// Schedule cap for the derivative coupling beta0.
    pub beta_max: f64,
    /// Geometric growth factor of both couplings.
    pub growth: f64,
    /// Initial value of every phi sample.
    pub phi_init: f64,
}

impl HqsConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let cfg = Self { alpha, beta, alpha_max: 1e3, beta_max: 1e5, growth: 2.0, phi_init: 1.0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(DpcError::Config("hqs penalties must be positive".into()));
        }
        if !(self.alpha_max > self.alpha && self.beta_max > self.beta) {
            return Err(DpcError::Config("schedule caps must exceed the initial weights".into()));
        }
        if !(self.growth > 1.0) {
            return Err(DpcError::Config("growth factor must exceed 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RldConfig {
    /// Weight of the sparsity surrogate penalty.
    pub alpha: f64,
    /// Weight of the second-derivative L1 penalty.
    pub beta: f64,
    /// Sharpness of the exponential L0 surrogate.
    pub c: f64,
    /// Learning rate.
    pub eta: f64,
    /// First-moment decay rate.
    pub rho1: f64,
    /// Second-moment decay rate.
    pub rho2: f64,
    /// Divide guard inside the adaptive step.
    pub xi: f64,
    /// Number of gradient iterations.
    pub t_max: usize,
    /// Smoothing width of |x| ~ sqrt(x^2 + eps^2) in cost and gradient.
    pub eps_abs: f64,
}

impl RldConfig {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            beta,
            c: 10.0,
            eta: 0.05,
            rho1: 0.9,
            rho2: 0.999,
            xi: 1e-8,
            t_max: 150,
            eps_abs: 1e-8,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return Err(DpcError::Config("penalty weights must be >= 0".into()));
        }
        if !(self.c > 0.0 && self.eta > 0.0 && self.xi > 0.0 && self.eps_abs > 0.0) {
            return Err(DpcError::Config("c, eta, xi, eps_abs must be positive".into()));
        }
        if !(self.rho1 > 0.0 && self.rho1 < 1.0 && self.rho2 > 0.0 && self.rho2 < 1.0) {
            return Err(DpcError::Config("decay rates must lie in (0, 1)".into()));
        }
        if self.t_max < 1 {
            return Err(DpcError::Config("t_max must be at least 1".into()));
        }
        Ok(())
    }
}
