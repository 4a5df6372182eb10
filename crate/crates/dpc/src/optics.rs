//! Optical model: frequency grid, pupil and source masks, phase transfer
//! functions and their real-space kernels.
//!
//! A differential phase contrast measurement pair is described by a binary
//! pupil `P(k)` (disc of radius `NA / lambda`) and two mirrored source masks
//! `S+`, `S-` with `S-(k) = S+(-k)`. The phase transfer function of the pair
//! is
//!
//! ```text
//! H(k) = i * [ A(k) - A(-k) ] / B,   A(k) = sum_k' (S+ - S-)(k') P(k') P(k' + k) dk^2
//! ```
//!
//! with `B = sum_k (S+ + S-)(k) |P(k)|^2 dk^2` the total background intensity.
//! Dividing the two-image difference by their sum makes the background drop
//! out of the measurement, so the transfer function relating phase to contrast
//! is background-normalized as well. `H` is odd and purely imaginary, hence
//! `H(0) = 0` and its real-space kernel is a real odd function with zero sum.
//!
//! The correlation `A` is evaluated with FFTs on a zero-padded (2H x 2W) grid,
//! which reproduces the literal discrete sum without periodic wraparound.

use crate::error::{DpcError, Result};
use crate::fft::{fft2, fftshift2, ifft2, ifftshift2, neg_index};
use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Relative tolerance for the symmetry invariants of transfer functions.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Imaging geometry: wavelength and NA of the objective, camera sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalConfig {
    /// Illumination wavelength in micrometers.
    pub wavelength_um: f64,
    /// Numerical aperture of the objective, in (0, 1).
    pub na: f64,
    /// Lateral magnification onto the camera.
    pub magnification: f64,
    /// Camera pixel pitch in micrometers.
    pub pixel_size_um: f64,
    /// Image width in pixels.
    pub width: usize,
    /// Image height in pixels.
    pub height: usize,
}

impl OpticalConfig {
    pub fn new(
        wavelength_um: f64,
        na: f64,
        magnification: f64,
        pixel_size_um: f64,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        let cfg = Self { wavelength_um, na, magnification, pixel_size_um, width, height };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check the construction invariants (used directly on deserialized configs).
    pub fn validate(&self) -> Result<()> {
        if self.width < 8 || self.height < 8 {
            return Err(DpcError::Config(format!(
                "image dimensions must be at least 8 pixels, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.wavelength_um > 0.0) {
            return Err(DpcError::Config("wavelength must be positive".into()));
        }
        if !(self.na > 0.0 && self.na < 1.0) {
            return Err(DpcError::Config(format!("NA must lie in (0, 1), got {}", self.na)));
        }
        if !(self.magnification > 0.0) {
            return Err(DpcError::Config("magnification must be positive".into()));
        }
        if !(self.pixel_size_um > 0.0) {
            return Err(DpcError::Config("pixel size must be positive".into()));
        }
        if self.cutoff_cyc_per_um() >= self.nyquist_cyc_per_um() {
            return Err(DpcError::Config(format!(
                "pupil cutoff {:.4} cyc/um reaches the Nyquist bound {:.4} cyc/um",
                self.cutoff_cyc_per_um(),
                self.nyquist_cyc_per_um()
            )));
        }
        Ok(())
    }

    /// Object-plane sampling in micrometers per pixel.
    pub fn object_sampling_um(&self) -> f64 {
        self.pixel_size_um / self.magnification
    }

    /// Pupil cutoff frequency `NA / lambda` in cycles per micrometer.
    pub fn cutoff_cyc_per_um(&self) -> f64 {
        self.na / self.wavelength_um
    }

    /// Nyquist frequency of the object-plane sampling.
    pub fn nyquist_cyc_per_um(&self) -> f64 {
        1.0 / (2.0 * self.object_sampling_um())
    }
}

/// Spatial-frequency coordinates of every sample, DC at unshifted index (0, 0).
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    pub kx: Array2<f64>,
    pub ky: Array2<f64>,
    pub dkx: f64,
    pub dky: f64,
    pub width: usize,
    pub height: usize,
}

impl FrequencyGrid {
    pub fn dim(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Frequency-space area element `dkx * dky`.
    pub fn dk_area(&self) -> f64 {
        self.dkx * self.dky
    }

    /// Radial frequency at a sample.
    pub fn radius(&self, r: usize, c: usize) -> f64 {
        self.kx[(r, c)].hypot(self.ky[(r, c)])
    }
}

/// Signed DFT frequency index: 0, 1, ..., n/2-1, then the negative half.
fn dft_freq_index(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

pub fn make_frequency_grid(config: &OpticalConfig) -> Result<FrequencyGrid> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let dx = config.object_sampling_um();
    let dkx = 1.0 / (w as f64 * dx);
    let dky = 1.0 / (h as f64 * dx);
    let kx = Array2::from_shape_fn((h, w), |(_, c)| dft_freq_index(c, w) as f64 * dkx);
    let ky = Array2::from_shape_fn((h, w), |(r, _)| dft_freq_index(r, h) as f64 * dky);
    Ok(FrequencyGrid { kx, ky, dkx, dky, width: w, height: h })
}

/// Binary objective-pupil mask: 1 inside the NA disc, 0 outside.
#[derive(Debug, Clone)]
pub struct PupilMask {
    pub values: Array2<f64>,
}

pub fn make_pupil(grid: &FrequencyGrid, config: &OpticalConfig) -> Result<PupilMask> {
    let cutoff = config.cutoff_cyc_per_um();
    if cutoff >= config.nyquist_cyc_per_um() {
        return Err(DpcError::Config(format!(
            "pupil cutoff {cutoff:.4} cyc/um reaches the Nyquist bound"
        )));
    }
    let values = Array2::from_shape_fn(grid.dim(), |(r, c)| {
        if grid.radius(r, c) <= cutoff {
            1.0
        } else {
            0.0
        }
    });
    Ok(PupilMask { values })
}

/// Which half-plane of the illumination pupil is lit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    Top,
    Bottom,
    Left,
    Right,
    /// Custom half-plane: unit normal at this angle (radians, in (kx, ky)).
    Angle(f64),
}

impl Direction {
    /// Unit normal of the lit half-plane; a sample is lit when `k . unit > 0`.
    pub fn unit(&self) -> (f64, f64) {
        match *self {
            Direction::Top => (0.0, -1.0),
            Direction::Bottom => (0.0, 1.0),
            Direction::Left => (-1.0, 0.0),
            Direction::Right => (1.0, 0.0),
            Direction::Angle(theta) => (theta.cos(), theta.sin()),
        }
    }

    pub fn opposite(&self) -> Direction {
        match *self {
            Direction::Top => Direction::Bottom,
            Direction::Bottom => Direction::Top,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Angle(theta) => Direction::Angle(theta + std::f64::consts::PI),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Direction::Top => "top".into(),
            Direction::Bottom => "bottom".into(),
            Direction::Left => "left".into(),
            Direction::Right => "right".into(),
            Direction::Angle(theta) => format!("angle-{theta:.4}"),
        }
    }
}

/// Shape of each half source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceGeometry {
    /// Half of the full NA disc.
    HalfDisc,
    /// Half of an annulus; inner radius is `inner_factor * NA / lambda`.
    HalfAnnulus { inner_factor: f64 },
}

impl SourceGeometry {
    fn inner_factor(&self) -> f64 {
        match *self {
            SourceGeometry::HalfDisc => 0.0,
            SourceGeometry::HalfAnnulus { inner_factor } => inner_factor,
        }
    }
}

/// One half-plane-restricted illumination mask.
#[derive(Debug, Clone)]
pub struct SourceMask {
    pub values: Array2<f64>,
    pub direction: Direction,
    pub geometry: SourceGeometry,
}

/// Build the matched anti-symmetric source pair `(S+, S-)` for one axis.
///
/// The two masks are exact mirror images through the origin: the samples on
/// the dividing line `k . unit = 0` belong to neither.
pub fn make_source_pair(
    grid: &FrequencyGrid,
    config: &OpticalConfig,
    direction: Direction,
    geometry: SourceGeometry,
) -> Result<(SourceMask, SourceMask)> {
    let inner = geometry.inner_factor();
    if !(0.0..1.0).contains(&inner) {
        return Err(DpcError::Config(format!(
            "annulus inner-radius factor must lie in [0, 1), got {inner}"
        )));
    }
    let cutoff = config.cutoff_cyc_per_um();
    let r_in = inner * cutoff;
    let (ux, uy) = direction.unit();

    let build = |sign: f64| {
        Array2::from_shape_fn(grid.dim(), |(r, c)| {
            let rad = grid.radius(r, c);
            let dot = sign * (grid.kx[(r, c)] * ux + grid.ky[(r, c)] * uy);
            if rad >= r_in && rad <= cutoff && dot > 0.0 {
                1.0
            } else {
                0.0
            }
        })
    };

    let pos = SourceMask { values: build(1.0), direction, geometry };
    let neg = SourceMask { values: build(-1.0), direction: direction.opposite(), geometry };
    Ok((pos, neg))
}

/// Phase transfer function of one DPC axis: odd, purely imaginary, H(0) = 0.
#[derive(Debug, Clone)]
pub struct TransferFunction {
    /// Complex spectrum on the frequency grid, unshifted layout.
    pub values: Array2<Complex<f64>>,
    /// Axis label, e.g. "top-bottom".
    pub axis: String,
}

impl TransferFunction {
    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }

    /// Largest modulus over the grid.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Verify H(0) = 0, odd symmetry, and imaginarity within [`SYMMETRY_TOL`].
    pub fn check_invariants(&self) -> Result<()> {
        let (h, w) = self.dim();
        let scale = self.max_abs();
        if self.values[(0, 0)].norm() != 0.0 {
            return Err(DpcError::SymmetryViolation("H(0) is not exactly zero".into()));
        }
        if scale == 0.0 {
            return Ok(());
        }
        let tol = SYMMETRY_TOL * scale;
        let mut max_odd = 0.0f64;
        let mut max_re = 0.0f64;
        for r in 0..h {
            let rn = neg_index(r, h);
            for c in 0..w {
                let v = self.values[(r, c)];
                max_re = max_re.max(v.re.abs());
                // The aliased Nyquist row/column has no -k partner.
                if (h % 2 == 0 && r == h / 2) || (w % 2 == 0 && c == w / 2) {
                    continue;
                }
                max_odd = max_odd.max((v + self.values[(rn, neg_index(c, w))]).norm());
            }
        }
        if max_odd > tol {
            return Err(DpcError::SymmetryViolation(format!(
                "odd-symmetry residue {max_odd:.3e} exceeds {tol:.3e}"
            )));
        }
        if max_re > tol {
            return Err(DpcError::SymmetryViolation(format!(
                "real-part residue {max_re:.3e} exceeds {tol:.3e}"
            )));
        }
        Ok(())
    }
}

/// Real-space convolution kernel of one DPC axis: real, odd, zero-sum.
#[derive(Debug, Clone)]
pub struct ConvolutionKernel {
    pub values: Array2<f64>,
    pub axis: String,
}

/// Cross-correlate `q` against `p` on a zero-padded grid:
/// `out[d] = sum_m q[m] p[m + d]` with no periodic wraparound, `d` in
/// centered offsets of the original grid, returned in big-grid layout.
fn padded_correlation(q: &Array2<f64>, p: &Array2<f64>) -> Array2<Complex<f64>> {
    let (h, w) = q.dim();
    let (hb, wb) = (2 * h, 2 * w);
    let embed = |src: &Array2<f64>| {
        let mut big = Array2::<Complex<f64>>::zeros((hb, wb));
        let (qc, pc) = (h / 2, w / 2);
        for r in 0..h {
            for c in 0..w {
                big[(r + qc, c + pc)] = Complex::new(src[(r, c)], 0.0);
            }
        }
        big
    };
    let mut q_hat = embed(&fftshift2(q));
    let mut p_hat = embed(&fftshift2(p));
    fft2(&mut q_hat);
    fft2(&mut p_hat);
    let mut prod = Array2::from_shape_fn((hb, wb), |idx| q_hat[idx].conj() * p_hat[idx]);
    ifft2(&mut prod);
    prod
}

/// Build the phase transfer function of a matched source pair (`H(k)` above).
pub fn compute_ptf(
    grid: &FrequencyGrid,
    pupil: &PupilMask,
    source_pos: &SourceMask,
    source_neg: &SourceMask,
) -> Result<TransferFunction> {
    let dims = grid.dim();
    if pupil.values.dim() != dims
        || source_pos.values.dim() != dims
        || source_neg.values.dim() != dims
    {
        return Err(DpcError::DimensionMismatch {
            expected: dims,
            actual: pupil.values.dim(),
        });
    }
    let (h, w) = dims;
    let dk2 = grid.dk_area();

    // Total background B = sum (S+ + S-) |P|^2 dk^2.
    let mut background = 0.0;
    for r in 0..h {
        for c in 0..w {
            let p = pupil.values[(r, c)];
            background += (source_pos.values[(r, c)] + source_neg.values[(r, c)]) * p * p;
        }
    }
    background *= dk2;
    if background == 0.0 {
        return Err(DpcError::DegenerateOptics(
            "source and pupil do not overlap: background intensity is zero".into(),
        ));
    }

    // Signed source difference; the mirrored side contributes the -k term.
    let q = Array2::from_shape_fn(dims, |idx| {
        (source_pos.values[idx] - source_neg.values[idx]) * pupil.values[idx]
    });
    let corr = padded_correlation(&q, &pupil.values);

    let (hb, wb) = corr.dim();
    let (rc, cc) = (h / 2, w / 2);
    let mut centered = Array2::<Complex<f64>>::zeros(dims);
    for r in 0..h {
        let dr = r as i64 - rc as i64;
        let rp = dr.rem_euclid(hb as i64) as usize;
        let rm = (-dr).rem_euclid(hb as i64) as usize;
        for c in 0..w {
            let dc = c as i64 - cc as i64;
            let cp = dc.rem_euclid(wb as i64) as usize;
            let cm = (-dc).rem_euclid(wb as i64) as usize;
            let diff = corr[(rp, cp)] - corr[(rm, cm)];
            centered[(r, c)] = Complex::new(0.0, 1.0) * diff * dk2 / background;
        }
    }

    // DC is exactly zero; the aliased Nyquist row/column has no -k partner.
    centered[(rc, cc)] = Complex::new(0.0, 0.0);
    if h % 2 == 0 {
        centered.row_mut(0).fill(Complex::new(0.0, 0.0));
    }
    if w % 2 == 0 {
        centered.column_mut(0).fill(Complex::new(0.0, 0.0));
    }

    let axis = format!(
        "{}-{}",
        source_pos.direction.label(),
        source_neg.direction.label()
    );
    Ok(TransferFunction { values: ifftshift2(&centered), axis })
}

/// Inverse-transform a transfer function into its real-space kernel.
pub fn kernel_from_ptf(tf: &TransferFunction) -> Result<ConvolutionKernel> {
    let mut spatial = tf.values.clone();
    ifft2(&mut spatial);
    let max_mod = spatial.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let max_im = spatial.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if max_mod > 0.0 && max_im > SYMMETRY_TOL * max_mod {
        return Err(DpcError::SymmetryViolation(format!(
            "kernel imaginary residue {:.3e} exceeds {:.3e}; transfer function is malformed",
            max_im,
            SYMMETRY_TOL * max_mod
        )));
    }
    Ok(ConvolutionKernel { values: spatial.mapv(|v| v.re), axis: tf.axis.clone() })
}
