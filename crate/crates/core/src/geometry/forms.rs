use std::f64::consts::PI;

use num_complex::Complex64;

use super::metric::{complex_structure, real_metric};
use super::Geometry;
use crate::calculus::{d, gradient, partial};
use crate::error::Result;
use crate::exterior::complex_basis::{from_complex_basis, type_part};
use crate::exterior::PolyForm;

impl Geometry {
    /// `ln det h` (real for Hermitian positive `h`).
    pub fn ln_det_h(&self, x: &[f64]) -> Result<f64> {
        Ok(*self.local_flat(x)?.last().expect("nonempty"))
    }

    /// `A⁰ = (i/4)(−∂_m L dz^m + ∂_{m̄} L dz̄^m)` with `L = ln det h`,
    /// which in real coordinates is `¼ Σ_j (−∂_{y_j} L dx_j + ∂_{x_j} L dy_j)`.
    pub fn det_bundle_potential(&self, x: &[f64]) -> Result<PolyForm> {
        let grad = gradient(&|y: &[f64]| self.ln_det_h(y), x, &self.cfg, &self.domain())?;
        let mut a = vec![Complex64::new(0.0, 0.0); x.len()];
        for j in 0..x.len() / 2 {
            a[2 * j] = Complex64::new(-0.25 * grad[2 * j + 1], 0.0);
            a[2 * j + 1] = Complex64::new(0.25 * grad[2 * j], 0.0);
        }
        Ok(PolyForm::one_form(&a))
    }

    /// `(A⁰, F₀ = dA⁰)`.
    pub fn det_bundle(&self, x: &[f64]) -> Result<(PolyForm, PolyForm)> {
        let a0 = self.det_bundle_potential(x)?;
        let f0 = d(&|y: &[f64]| self.det_bundle_potential(y), x, &self.cfg, &self.domain())?;
        Ok((a0, f0))
    }

    /// `ω = h_{jk̄} dz^j ∧ dz̄^k`.
    pub fn kahler_form(&self, x: &[f64]) -> Result<PolyForm> {
        let h = self.metric_at(x)?;
        let n = h.nrows();
        let mut cf = PolyForm::zero(2 * n);
        for j in 0..n {
            for k in 0..n {
                cf.add_monomial(&[2 * j, 2 * k + 1], h[(j, k)]);
            }
        }
        Ok(from_complex_basis(&cf))
    }

    pub fn d_kahler_form(&self, x: &[f64]) -> Result<PolyForm> {
        d(&|y: &[f64]| self.kahler_form(y), x, &self.cfg, &self.domain())
    }

    /// Largest coefficient of `∂∂̄ω`: the `(2,2)` part of `d` applied to
    /// `∂̄ω`, the `(1,2)` part of `dω`. (The full `d` of `∂ω + ∂̄ω` is `d²ω = 0`.)
    pub fn skt_residual(&self, x: &[f64]) -> Result<f64> {
        let dbar_omega = |y: &[f64]| -> Result<PolyForm> {
            Ok(type_part(&self.d_kahler_form(y)?, 1, 2))
        };
        let dd = d(&dbar_omega, x, &self.cfg, &self.domain())?;
        Ok(type_part(&dd, 2, 2).max_abs())
    }

    /// `ln det g` of the real metric.
    pub fn ln_det_g(&self, x: &[f64]) -> Result<f64> {
        let h = self.metric_at(x)?;
        let d = 2 * h.nrows();
        let g = nalgebra::DMatrix::from_row_slice(d, d, &real_metric(&h));
        Ok(g.determinant().ln())
    }

    /// `(1/16π) I_M^P ∂_N ∂_P (ln det g) dx^M ∧ dx^N`.
    pub fn unwound_exponent(&self, x: &[f64]) -> Result<PolyForm> {
        let dim = x.len();
        let domain = self.domain();
        let grad = |y: &[f64]| gradient(&|z: &[f64]| self.ln_det_g(z), y, &self.cfg, &domain);
        // hess[n][p] = ∂_N ∂_P ln det g
        let hess: Vec<Vec<f64>> = (0..dim)
            .map(|nn| partial(&grad, x, nn, &self.cfg, &domain))
            .collect::<Result<_>>()?;
        let i = complex_structure(dim / 2);
        let mut f = vec![Complex64::new(0.0, 0.0); dim * dim];
        for m in 0..dim {
            for nn in 0..dim {
                let v: f64 = (0..dim).map(|p| i[m * dim + p] * hess[nn][p]).sum();
                // two_form halves its input; the sum runs over all M, N.
                f[m * dim + nn] = Complex64::new(v / (8.0 * PI), 0.0);
            }
        }
        Ok(PolyForm::two_form(dim, &f))
    }
}
