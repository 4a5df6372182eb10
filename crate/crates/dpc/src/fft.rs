//! 2D Fourier transforms on row-major arrays.
//!
//! Complex transforms are unnormalized on the forward pass; the inverse
//! divides by `width * height`, so `ifft2(fft2(x)) == x` up to rounding.
//! [`RealDft`] is the half-spectrum (r2c/c2r) path used by the solvers,
//! where every spatial field is real and every filter is Hermitian.

use ndarray::Array2;
use num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

fn complex_planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn real_planner() -> &'static Mutex<RealFftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<RealFftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(RealFftPlanner::new()))
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    complex_planner().lock().unwrap().plan_fft(len, direction)
}

fn transpose<T: Copy + Default>(height: usize, width: usize, src: &[T], dst: &mut [T]) {
    for r in 0..height {
        for c in 0..width {
            dst[c * height + r] = src[r * width + c];
        }
    }
}

fn fft2_dir(data: &mut Array2<Complex<f64>>, direction: FftDirection) {
    let (h, w) = data.dim();
    let row_plan = plan(w, direction);
    let col_plan = plan(h, direction);
    let buf = data.as_slice_mut().expect("contiguous row-major array");

    let mut scratch = vec![Complex::default(); row_plan.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(w) {
        row_plan.process_with_scratch(row, &mut scratch);
    }

    let mut tr = vec![Complex::default(); buf.len()];
    transpose(h, w, buf, &mut tr);
    scratch.resize(col_plan.get_inplace_scratch_len(), Complex::default());
    for col in tr.chunks_exact_mut(h) {
        col_plan.process_with_scratch(col, &mut scratch);
    }
    transpose(w, h, &tr, buf);
}

/// In-place forward 2D DFT (unnormalized).
pub fn fft2(data: &mut Array2<Complex<f64>>) {
    fft2_dir(data, FftDirection::Forward);
}

/// In-place inverse 2D DFT, normalized by `1 / (width * height)`.
pub fn ifft2(data: &mut Array2<Complex<f64>>) {
    fft2_dir(data, FftDirection::Inverse);
    let n = data.len() as f64;
    data.mapv_inplace(|v| v / n);
}

/// Move DC from index (0, 0) to the array center (numpy `fftshift` convention).
pub fn fftshift2<T: Copy + Default>(data: &Array2<T>) -> Array2<T> {
    roll2(data, data.dim().0 / 2, data.dim().1 / 2)
}

/// Inverse of [`fftshift2`].
pub fn ifftshift2<T: Copy + Default>(data: &Array2<T>) -> Array2<T> {
    let (h, w) = data.dim();
    roll2(data, h - h / 2, w - w / 2)
}

fn roll2<T: Copy + Default>(data: &Array2<T>, dr: usize, dc: usize) -> Array2<T> {
    let (h, w) = data.dim();
    let mut out = Array2::default((h, w));
    for r in 0..h {
        let rr = (r + dr) % h;
        for c in 0..w {
            out[(rr, (c + dc) % w)] = data[(r, c)];
        }
    }
    out
}

/// Index of the `-k` partner of frequency index `i` on an `n`-point DFT grid.
pub fn neg_index(i: usize, n: usize) -> usize {
    (n - i) % n
}

/// Half-spectrum transform pair for real `height x width` images.
///
/// Forward output is `height x (width / 2 + 1)`; the missing columns are the
/// Hermitian mirror of the stored ones.
pub struct RealDft {
    height: usize,
    width: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl RealDft {
    pub fn new(height: usize, width: usize) -> Self {
        let (r2c, c2r) = {
            let mut planner = real_planner().lock().unwrap();
            (planner.plan_fft_forward(width), planner.plan_fft_inverse(width))
        };
        Self {
            height,
            width,
            r2c,
            c2r,
            col_fwd: plan(height, FftDirection::Forward),
            col_inv: plan(height, FftDirection::Inverse),
        }
    }

    pub fn half_width(&self) -> usize {
        self.width / 2 + 1
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Unnormalized forward transform of a real image into its half-spectrum.
    pub fn forward(&self, src: &Array2<f64>) -> Array2<Complex<f64>> {
        assert_eq!(src.dim(), (self.height, self.width));
        let hw = self.half_width();
        let mut half = Array2::<Complex<f64>>::zeros((self.height, hw));
        let mut row_in = vec![0.0f64; self.width];
        let mut scratch = vec![Complex::default(); self.r2c.get_scratch_len()];
        let src_buf = src.as_slice().expect("contiguous input");
        let half_buf = half.as_slice_mut().unwrap();
        for (r, row) in src_buf.chunks_exact(self.width).enumerate() {
            row_in.copy_from_slice(row);
            self.r2c
                .process_with_scratch(&mut row_in, &mut half_buf[r * hw..(r + 1) * hw], &mut scratch)
                .expect("r2c transform");
        }
        self.columns(&mut half, FftDirection::Forward);
        half
    }

    /// Inverse of [`RealDft::forward`], normalized by `1 / (width * height)`.
    pub fn inverse(&self, half: &Array2<Complex<f64>>) -> Array2<f64> {
        let hw = self.half_width();
        assert_eq!(half.dim(), (self.height, hw));
        let mut spec = half.clone();
        self.columns(&mut spec, FftDirection::Inverse);

        let mut out = Array2::<f64>::zeros((self.height, self.width));
        let spec_buf = spec.as_slice_mut().unwrap();
        let out_buf = out.as_slice_mut().unwrap();
        let mut scratch = vec![Complex::default(); self.c2r.get_scratch_len()];
        for (r, row) in spec_buf.chunks_exact_mut(hw).enumerate() {
            // Real rows require real DC / Nyquist bins; clear rounding residue.
            row[0].im = 0.0;
            if self.width % 2 == 0 {
                row[hw - 1].im = 0.0;
            }
            self.c2r
                .process_with_scratch(row, &mut out_buf[r * self.width..(r + 1) * self.width], &mut scratch)
                .expect("c2r transform");
        }
        let n = (self.height * self.width) as f64;
        out.mapv_inplace(|v| v / n);
        out
    }

    fn columns(&self, half: &mut Array2<Complex<f64>>, direction: FftDirection) {
        let (h, hw) = half.dim();
        let plan = match direction {
            FftDirection::Forward => &self.col_fwd,
            FftDirection::Inverse => &self.col_inv,
        };
        let buf = half.as_slice_mut().unwrap();
        let mut tr = vec![Complex::default(); buf.len()];
        transpose(h, hw, buf, &mut tr);
        let mut scratch = vec![Complex::default(); plan.get_inplace_scratch_len()];
        for col in tr.chunks_exact_mut(h) {
            plan.process_with_scratch(col, &mut scratch);
        }
        transpose(hw, h, &tr, buf);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn roundtrip_c2c(h: usize, w: usize) {
        let img = Array2::from_shape_fn((h, w), |(r, c)| {
            Complex::new((r * w + c) as f64 * 0.01 - 1.0, (c as f64).sin())
        });
        let mut spec = img.clone();
        fft2(&mut spec);
        ifft2(&mut spec);
        for (a, b) in img.iter().zip(spec.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn complex_roundtrip() {
        roundtrip_c2c(8, 8);
        roundtrip_c2c(9, 15);
        roundtrip_c2c(12, 10);
    }

    #[test]
    fn real_half_spectrum_matches_full_transform() {
        for &(h, w) in &[(8usize, 8usize), (9, 12), (10, 17)] {
            let img = Array2::from_shape_fn((h, w), |(r, c)| ((r * 31 + c * 7) % 13) as f64 - 6.0);
            let dft = RealDft::new(h, w);
            let half = dft.forward(&img);

            let mut full = img.mapv(|v| Complex::new(v, 0.0));
            fft2(&mut full);
            for r in 0..h {
                for c in 0..dft.half_width() {
                    assert!((half[(r, c)] - full[(r, c)]).norm() < 1e-10);
                }
            }

            let back = dft.inverse(&half);
            for (a, b) in img.iter().zip(back.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn shift_roundtrip_and_dc_placement() {
        for &(h, w) in &[(8usize, 8usize), (9, 7)] {
            let img = Array2::from_shape_fn((h, w), |(r, c)| (r * w + c) as f64);
            let shifted = fftshift2(&img);
            assert_eq!(shifted[(h / 2, w / 2)], img[(0, 0)]);
            let back = ifftshift2(&shifted);
            assert_eq!(img, back);
        }
    }
}
