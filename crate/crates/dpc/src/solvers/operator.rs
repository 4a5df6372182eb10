//! Operator core shared by the solvers.
//!
//! Spatial stencils (periodic boundaries) and their exact discrete adjoints,
//! plus the Fourier symbols that diagonalize them on the half-spectrum grid.

use super::DpcStack;
use crate::fft::RealDft;
use crate::optics::TransferFunction;
use ndarray::Array2;
use num_complex::Complex;
use std::f64::consts::{PI, SQRT_2};

fn wrap_maps(n: usize) -> (Vec<usize>, Vec<usize>) {
    let plus = (0..n).map(|i| (i + 1) % n).collect();
    let minus = (0..n).map(|i| (i + n - 1) % n).collect();
    (plus, minus)
}

/// Second-difference field `(Dxx phi, Dyy phi, sqrt(2) Dxy phi)`.
#[derive(Debug, Clone)]
pub struct HessianField {
    pub xx: Array2<f64>,
    pub yy: Array2<f64>,
    pub xy: Array2<f64>,
}

impl HessianField {
    pub fn dim(&self) -> (usize, usize) {
        self.xx.dim()
    }

    pub fn components(&self) -> [&Array2<f64>; 3] {
        [&self.xx, &self.yy, &self.xy]
    }
}

/// Apply the second-difference operator with periodic boundaries.
pub fn hessian_apply(phi: &Array2<f64>) -> HessianField {
    let (h, w) = phi.dim();
    let (rp, rm) = wrap_maps(h);
    let (cp, cm) = wrap_maps(w);
    let mut xx = Array2::zeros((h, w));
    let mut yy = Array2::zeros((h, w));
    let mut xy = Array2::zeros((h, w));
    for r in 0..h {
        for c in 0..w {
            let center = phi[(r, c)];
            xx[(r, c)] = phi[(r, cp[c])] - 2.0 * center + phi[(r, cm[c])];
            yy[(r, c)] = phi[(rp[r], c)] - 2.0 * center + phi[(rm[r], c)];
            xy[(r, c)] = SQRT_2
                * (phi[(rp[r], cp[c])] - phi[(rp[r], c)] - phi[(r, cp[c])] + center);
        }
    }
    HessianField { xx, yy, xy }
}

/// Exact discrete adjoint of [`hessian_apply`].
pub fn hessian_adjoint(g: &HessianField) -> Array2<f64> {
    let (h, w) = g.dim();
    let (rp, rm) = wrap_maps(h);
    let (cp, cm) = wrap_maps(w);
    Array2::from_shape_fn((h, w), |(r, c)| {
        let xx = g.xx[(r, cp[c])] - 2.0 * g.xx[(r, c)] + g.xx[(r, cm[c])];
        let yy = g.yy[(rp[r], c)] - 2.0 * g.yy[(r, c)] + g.yy[(rm[r], c)];
        let xy = g.xy[(rm[r], cm[c])] - g.xy[(rm[r], c)] - g.xy[(r, cm[c])] + g.xy[(r, c)];
        xx + yy + SQRT_2 * xy
    })
}

/// Forward differences `(Dx phi, Dy phi)` with periodic boundaries.
pub fn gradient_apply(phi: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let (h, w) = phi.dim();
    let (rp, _) = wrap_maps(h);
    let (cp, _) = wrap_maps(w);
    let dx = Array2::from_shape_fn((h, w), |(r, c)| phi[(r, cp[c])] - phi[(r, c)]);
    let dy = Array2::from_shape_fn((h, w), |(r, c)| phi[(rp[r], c)] - phi[(r, c)]);
    (dx, dy)
}

/// Exact discrete adjoint of [`gradient_apply`] (negative divergence).
pub fn gradient_adjoint(dx: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let (h, w) = dx.dim();
    let (_, rm) = wrap_maps(h);
    let (_, cm) = wrap_maps(w);
    Array2::from_shape_fn((h, w), |(r, c)| {
        dx[(r, cm[c])] - dx[(r, c)] + dy[(rm[r], c)] - dy[(r, c)]
    })
}

/// `sign(x) * max(|x| - t, 0)` element-wise.
pub(crate) fn soft_threshold_array(x: &Array2<f64>, threshold: f64) -> Array2<f64> {
    x.mapv(|v| v.signum() * (v.abs() - threshold).max(0.0))
}

/// Convolve an image with the kernel of a transfer function (`K_n`).
pub fn transfer_apply(tf: &TransferFunction, image: &Array2<f64>) -> Array2<f64> {
    let (h, w) = image.dim();
    let dft = RealDft::new(h, w);
    let mut spec = dft.forward(image);
    let hw = dft.half_width();
    for r in 0..h {
        for c in 0..hw {
            spec[(r, c)] *= tf.values[(r, c)];
        }
    }
    dft.inverse(&spec)
}

/// Adjoint of [`transfer_apply`] over the real inner product (`K_n^T`).
pub fn transfer_adjoint(tf: &TransferFunction, image: &Array2<f64>) -> Array2<f64> {
    let (h, w) = image.dim();
    let dft = RealDft::new(h, w);
    let mut spec = dft.forward(image);
    let hw = dft.half_width();
    for r in 0..h {
        for c in 0..hw {
            spec[(r, c)] *= tf.values[(r, c)].conj();
        }
    }
    dft.inverse(&spec)
}

/// Half-spectrum transforms, transfer functions, data spectra, and operator
/// symbols for one stack. Everything a solver's quadratic step needs.
pub(crate) struct SpectralCore {
    pub h: usize,
    pub w: usize,
    pub hw: usize,
    pub dft: RealDft,
    /// Transfer functions restricted to the half grid.
    pub tf: Vec<Array2<Complex<f64>>>,
    /// `sum_n |H_n|^2`.
    pub sum_h2: Array2<f64>,
    /// Data spectra `DFT[s_n]`.
    pub s_hat: Vec<Array2<Complex<f64>>>,
    /// Hessian symbols `(d_xx, d_yy, sqrt(2) d_xy)`.
    pub hess: [Array2<Complex<f64>>; 3],
    /// `sum_c |d_c|^2` over the three Hessian components.
    pub hess_abs2: Array2<f64>,
    /// Forward-difference symbols `(g_x, g_y)`.
    pub grad: [Array2<Complex<f64>>; 2],
    /// `|g_x|^2 + |g_y|^2`.
    pub grad_abs2: Array2<f64>,
}

impl SpectralCore {
    pub fn new(stack: &DpcStack) -> Self {
        let (h, w) = stack.dim();
        let dft = RealDft::new(h, w);
        let hw = dft.half_width();

        let tf: Vec<Array2<Complex<f64>>> = stack
            .transfer_functions
            .iter()
            .map(|t| Array2::from_shape_fn((h, hw), |(r, c)| t.values[(r, c)]))
            .collect();
        let mut sum_h2 = Array2::zeros((h, hw));
        for t in &tf {
            for (acc, v) in sum_h2.iter_mut().zip(t.iter()) {
                *acc += v.norm_sqr();
            }
        }
        let s_hat = stack.images.iter().map(|img| dft.forward(&img.values)).collect();

        let one = Complex::new(1.0, 0.0);
        let ey = |r: usize| Complex::from_polar(1.0, 2.0 * PI * r as f64 / h as f64);
        let ex = |c: usize| Complex::from_polar(1.0, 2.0 * PI * c as f64 / w as f64);
        let d_xx = Array2::from_shape_fn((h, hw), |(_, c)| ex(c) - 2.0 * one + ex(c).conj());
        let d_yy = Array2::from_shape_fn((h, hw), |(r, _)| ey(r) - 2.0 * one + ey(r).conj());
        let d_xy = Array2::from_shape_fn((h, hw), |(r, c)| SQRT_2 * (ey(r) - one) * (ex(c) - one));
        let hess_abs2 = Array2::from_shape_fn((h, hw), |idx| {
            d_xx[idx].norm_sqr() + d_yy[idx].norm_sqr() + d_xy[idx].norm_sqr()
        });
        let g_x = Array2::from_shape_fn((h, hw), |(_, c)| ex(c) - one);
        let g_y = Array2::from_shape_fn((h, hw), |(r, _)| ey(r) - one);
        let grad_abs2 =
            Array2::from_shape_fn((h, hw), |idx| g_x[idx].norm_sqr() + g_y[idx].norm_sqr());

        Self {
            h,
            w,
            hw,
            dft,
            tf,
            sum_h2,
            s_hat,
            hess: [d_xx, d_yy, d_xy],
            hess_abs2,
            grad: [g_x, g_y],
            grad_abs2,
        }
    }

    /// Parseval weight of a half-spectrum column.
    pub fn col_weight(&self, c: usize) -> f64 {
        if c == 0 || (self.w % 2 == 0 && c == self.hw - 1) {
            1.0
        } else {
            2.0
        }
    }

    /// Data residual `sum_n ||K_n phi - s_n||^2` from the phase spectrum.
    pub fn residual(&self, phi_hat: &Array2<Complex<f64>>) -> f64 {
        let mut acc = 0.0;
        for (t, s) in self.tf.iter().zip(self.s_hat.iter()) {
            for r in 0..self.h {
                for c in 0..self.hw {
                    let d = t[(r, c)] * phi_hat[(r, c)] - s[(r, c)];
                    acc += self.col_weight(c) * d.norm_sqr();
                }
            }
        }
        acc / (self.h * self.w) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{
        compute_ptf, make_frequency_grid, make_pupil, make_source_pair, Direction, OpticalConfig,
        SourceGeometry,
    };
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Array2<f64> {
        Array2::from_shape_fn((h, w), |_| rng.gen_range(-1.0..1.0))
    }

    fn dot(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn constant_and_ramp_are_annihilated() {
        let constant = Array2::from_elem((12, 10), 3.7);
        let field = hessian_apply(&constant);
        for comp in field.components() {
            assert!(comp.iter().all(|&v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn hessian_adjoint_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let phi = random_image(&mut rng, 13, 11);
            let g = HessianField {
                xx: random_image(&mut rng, 13, 11),
                yy: random_image(&mut rng, 13, 11),
                xy: random_image(&mut rng, 13, 11),
            };
            let hphi = hessian_apply(&phi);
            let lhs = dot(&hphi.xx, &g.xx) + dot(&hphi.yy, &g.yy) + dot(&hphi.xy, &g.xy);
            let rhs = dot(&phi, &hessian_adjoint(&g));
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn gradient_adjoint_inner_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..20 {
            let phi = random_image(&mut rng, 9, 14);
            let gx = random_image(&mut rng, 9, 14);
            let gy = random_image(&mut rng, 9, 14);
            let (dx, dy) = gradient_apply(&phi);
            let lhs = dot(&dx, &gx) + dot(&dy, &gy);
            let rhs = dot(&phi, &gradient_adjoint(&gx, &gy));
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn transfer_adjoint_inner_product() {
        let cfg = OpticalConfig::new(0.530, 0.3, 10.0, 3.46, 24, 24).unwrap();
        let grid = make_frequency_grid(&cfg).unwrap();
        let pupil = make_pupil(&grid, &cfg).unwrap();
        let (pos, neg) =
            make_source_pair(&grid, &cfg, Direction::Left, SourceGeometry::HalfDisc).unwrap();
        let tf = compute_ptf(&grid, &pupil, &pos, &neg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..20 {
            let phi = random_image(&mut rng, 24, 24);
            let y = random_image(&mut rng, 24, 24);
            let lhs = dot(&transfer_apply(&tf, &phi), &y);
            let rhs = dot(&phi, &transfer_adjoint(&tf, &y));
            let scale = lhs.abs().max(rhs.abs()).max(1e-300);
            assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn spectral_symbols_match_the_stencils() {
        // Applying the operators through their symbols must equal the
        // spatial stencils: the quadratic solvers depend on this identity.
        let h = 12;
        let w = 10;
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let phi = random_image(&mut rng, h, w);
        let dft = RealDft::new(h, w);

        let cfg = OpticalConfig::new(0.530, 0.3, 10.0, 3.46, w, h).unwrap();
        let grid = make_frequency_grid(&cfg).unwrap();
        let pupil = make_pupil(&grid, &cfg).unwrap();
        let (pos, neg) =
            make_source_pair(&grid, &cfg, Direction::Top, SourceGeometry::HalfDisc).unwrap();
        let tf = compute_ptf(&grid, &pupil, &pos, &neg).unwrap();
        let image = crate::forward::DpcImage { values: phi.clone(), axis: tf.axis.clone() };
        let stack = DpcStack::new(vec![image], vec![tf]).unwrap();
        let core = SpectralCore::new(&stack);

        let phi_hat = dft.forward(&phi);
        let field = hessian_apply(&phi);
        for (symbol, spatial) in core.hess.iter().zip(field.components()) {
            let mut spec = phi_hat.clone();
            for (v, s) in spec.iter_mut().zip(symbol.iter()) {
                *v *= s;
            }
            let via_spectrum = dft.inverse(&spec);
            for (a, b) in via_spectrum.iter().zip(spatial.iter()) {
                assert!((a - b).abs() < 1e-11);
            }
        }

        let (dx, dy) = gradient_apply(&phi);
        for (symbol, spatial) in core.grad.iter().zip([&dx, &dy]) {
            let mut spec = phi_hat.clone();
            for (v, s) in spec.iter_mut().zip(symbol.iter()) {
                *v *= s;
            }
            let via_spectrum = dft.inverse(&spec);
            for (a, b) in via_spectrum.iter().zip(spatial.iter()) {
                assert!((a - b).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn parseval_residual_matches_spatial_sum() {
        let cfg = OpticalConfig::new(0.530, 0.3, 10.0, 3.46, 16, 16).unwrap();
        let grid = make_frequency_grid(&cfg).unwrap();
        let pupil = make_pupil(&grid, &cfg).unwrap();
        let (pos, neg) =
            make_source_pair(&grid, &cfg, Direction::Top, SourceGeometry::HalfDisc).unwrap();
        let tf = compute_ptf(&grid, &pupil, &pos, &neg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let phi = random_image(&mut rng, 16, 16);
        let s = random_image(&mut rng, 16, 16);
        let image = crate::forward::DpcImage { values: s.clone(), axis: tf.axis.clone() };
        let stack = DpcStack::new(vec![image], vec![tf.clone()]).unwrap();
        let core = SpectralCore::new(&stack);
        let phi_hat = core.dft.forward(&phi);

        let spatial: f64 = {
            let k = transfer_apply(&tf, &phi);
            k.iter().zip(s.iter()).map(|(a, b)| (a - b).powi(2)).sum()
        };
        let spectral = core.residual(&phi_hat);
        assert!((spatial - spectral).abs() <= 1e-10 * spatial.max(1.0));
    }
}
