//! Quantitative differential phase contrast (DPC) toolkit: transfer
//! functions from optical geometry, forward simulation with calibrated
//! noise, four deconvolution solvers, an adaptive noise sensor, and
//! reconstruction-quality metrics.

pub mod error;
pub mod fft;
pub mod forward;
pub mod metrics;
pub mod optics;
pub mod pfm;
pub mod phantom;
pub mod sensor;
pub mod solvers;

pub use error::{DpcError, Result};
