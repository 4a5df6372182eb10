//! JSON configuration schemas for the CLI commands.

use dpc::forward::NoiseSpec;
use dpc::optics::{Direction, OpticalConfig, SourceGeometry};
use dpc::phantom::PhantomSpec;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Errors that should surface as exit code 2 (usage / configuration).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(message: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(message.into()).into())
}

fn default_geometry() -> SourceGeometry {
    SourceGeometry::HalfDisc
}

fn default_axes() -> Vec<String> {
    vec!["top-bottom".into(), "left-right".into()]
}

/// `simulate` input: optics, target, noise, and the illumination axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub optical: OpticalConfig,
    pub phantom: PhantomSpec,
    pub noise: NoiseSpec,
    #[serde(default = "default_axes")]
    pub axes: Vec<String>,
    #[serde(default = "default_geometry")]
    pub geometry: SourceGeometry,
}

impl SimulateConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.optical.validate().map_err(|e| e.to_string())?;
        self.phantom.validate().map_err(|e| e.to_string())?;
        self.noise.validate().map_err(|e| e.to_string())?;
        if self.phantom.size != self.optical.width || self.phantom.size != self.optical.height {
            return Err(format!(
                "phantom size {} must match the optical grid {}x{}",
                self.phantom.size, self.optical.width, self.optical.height
            ));
        }
        if self.axes.is_empty() {
            return Err("at least one illumination axis is required".into());
        }
        for axis in &self.axes {
            parse_axis(axis)?;
        }
        Ok(())
    }
}

/// Benchmark sweep definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub optical: OpticalConfig,
    pub phantoms: Vec<PhantomSpec>,
    pub snr_db: Vec<f64>,
    pub methods: Vec<String>,
    pub trials: usize,
    pub master_seed: u64,
    #[serde(default = "default_axes")]
    pub axes: Vec<String>,
    #[serde(default = "default_geometry")]
    pub geometry: SourceGeometry,
    /// Fixed Tikhonov weight (the conventional baseline setting).
    #[serde(default = "default_tikhonov_alpha")]
    pub tikhonov_alpha: f64,
    /// Strength of the low-order illumination-residue background injected
    /// alongside the Gaussian noise, as a multiple of the noise sigma.
    #[serde(default = "default_background_fraction")]
    pub background_fraction: f64,
}

fn default_background_fraction() -> f64 {
    1.0
}

fn default_tikhonov_alpha() -> f64 {
    1e-4
}

pub const METHOD_NAMES: [&str; 4] = ["tikhonov", "tv", "dsp-hqs", "dsp-rld"];

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.optical.validate().map_err(|e| e.to_string())?;
        if self.phantoms.is_empty() {
            return Err("at least one phantom is required".into());
        }
        for spec in &self.phantoms {
            spec.validate().map_err(|e| e.to_string())?;
            if spec.size != self.optical.width || spec.size != self.optical.height {
                return Err(format!(
                    "phantom size {} must match the optical grid {}x{}",
                    spec.size, self.optical.width, self.optical.height
                ));
            }
        }
        if self.snr_db.is_empty() {
            return Err("at least one SNR level is required".into());
        }
        if self.trials < 1 {
            return Err("trial count must be at least 1".into());
        }
        if self.methods.is_empty() {
            return Err("at least one method is required".into());
        }
        for m in &self.methods {
            if !METHOD_NAMES.contains(&m.as_str()) {
                return Err(format!(
                    "unknown method {m:?}; expected one of {METHOD_NAMES:?}"
                ));
            }
        }
        if self.axes.is_empty() {
            return Err("at least one illumination axis is required".into());
        }
        for axis in &self.axes {
            parse_axis(axis)?;
        }
        Ok(())
    }

    /// The reduced preset: 256x256 targets, 3 trials.
    pub fn quick(mut self) -> Self {
        self.optical.width = 256;
        self.optical.height = 256;
        for spec in &mut self.phantoms {
            spec.size = 256;
        }
        self.trials = 3;
        self
    }
}

/// Parse an axis name into the positive-side direction.
///
/// Accepted: `top-bottom`, `bottom-top`, `left-right`, `right-left`,
/// or `angle:<radians>`.
pub fn parse_axis(name: &str) -> Result<Direction, String> {
    match name {
        "top-bottom" => Ok(Direction::Top),
        "bottom-top" => Ok(Direction::Bottom),
        "left-right" => Ok(Direction::Left),
        "right-left" => Ok(Direction::Right),
        other => {
            if let Some(rest) = other.strip_prefix("angle:") {
                let theta: f64 = rest
                    .parse()
                    .map_err(|_| format!("invalid angle in axis {other:?}"))?;
                Ok(Direction::Angle(theta))
            } else {
                Err(format!(
                    "unknown axis {other:?}; expected top-bottom, bottom-top, left-right, \
                     right-left, or angle:<radians>"
                ))
            }
        }
    }
}
