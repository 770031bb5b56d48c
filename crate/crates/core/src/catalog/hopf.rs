use num_complex::Complex64;

use crate::calculus::{complex_coords, del_holo, gradient, Domain, FdConfig};
use crate::error::{Error, Result};
use crate::exterior::complex_basis::to_complex_basis;
use crate::exterior::PolyForm;
use crate::geometry::{CMatrix, ConnectionChoice, Geometry, HermitianMetricField};

/// `−½Δ^Dol f` on functions for `h = δ/(z̄z)` on `Cⁿ∖{0}`:
/// `−(z̄_k z_k) ∂̄_j ∂_j f + (n − 1) z_j ∂_j f`, from `∂†∂` with the volume
/// density `(z̄z)^{−n}`. For `n = 2` the second coefficient is 1.
///
/// Second derivatives are nested differences.
pub fn dolbeault_laplacian0<F>(f: &F, x: &[f64], cfg: &FdConfig, domain: &Domain) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Result<Complex64>,
{
    let n = x.len() / 2;
    let z = complex_coords(x);
    let zz: f64 = z.iter().map(|v| v.norm_sqr()).sum();
    let holo = |y: &[f64]| del_holo(f, y, cfg, domain);
    let first = holo(x)?;
    // grads[m][j] = ∂_{x^m} ∂_j f
    let grads = gradient(&holo, x, cfg, domain)?;
    let mut box_f = Complex64::new(0.0, 0.0);
    for j in 0..n {
        box_f += (grads[2 * j][j] + Complex64::i() * grads[2 * j + 1][j]) * 0.5;
    }
    let euler: Complex64 = z.iter().zip(&first).map(|(zj, dj)| zj * dj).sum();
    Ok(-box_f * zz + euler * (n as f64 - 1.0))
}

/// Wedge-product residuals on the Hopf manifold, each relative to the square
/// of the largest coefficient of its factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopfIdentities {
    /// `max |ℱ∧ℱ| / max |ℱ|²` for `ℱ = ℱ₀`.
    pub ff: f64,
    /// `max |Σ_N ℛ_{MN}∧ℛ_{NP}| / max |ℛ|²`, Levi-Civita curvature.
    pub rr: f64,
}

/// `ℱ∧ℱ` and `ℛ_{MN}∧ℛ_{NP}` at `x`. The metric is conformally flat, so the
/// orthonormal-frame curvature matrix is the coordinate one up to a scalar
/// and vanishing of the matrix square does not depend on the index type.
pub fn hopf_identities(geometry: &Geometry, x: &[f64]) -> Result<HopfIdentities> {
    let g = geometry.with_memo();
    let f = g.det_bundle(x)?.1;
    let ff = f.wedge(&f)?.max_abs() / f.max_abs().powi(2).max(f64::MIN_POSITIVE);
    let r = g.curvature(ConnectionChoice::LeviCivita, x)?.real_matrix();
    let rr = r.wedge(&r)?.max_abs() / r.max_abs().powi(2).max(f64::MIN_POSITIVE);
    Ok(HopfIdentities { ff, rr })
}

fn subsets(n: usize, p: usize) -> Vec<Vec<usize>> {
    if p == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for last in (p - 1)..n {
        for mut s in subsets(last, p - 1) {
            s.push(last);
            out.push(s);
        }
    }
    out
}

/// Pointwise norm `‖A‖² = Σ_{J,K} A_J A*_K det(h^{k̄ j})_{K,J}` of a form of
/// type `(p,0)` written `A = Σ_{j₁<…<j_p} A_J dz^{j₁}∧…∧dz^{j_p}`. For
/// `p = 1` this is `A_j A*_k h^{k̄j}`.
pub fn form_norm(a: &PolyForm, h: &CMatrix) -> Result<f64> {
    let n = h.nrows();
    if a.dim() != 2 * n {
        return Err(Error::DimensionMismatch {
            left: 2 * n,
            right: a.dim(),
        });
    }
    let c = to_complex_basis(a);
    let scale = c.max_abs();
    let anti = c
        .raw()
        .iter()
        .enumerate()
        .filter(|(mask, _)| mask & 0xAAAA_AAAA != 0)
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max);
    if anti > 1e-12 * scale.max(1.0) {
        return Err(Error::NotHolomorphicForm { magnitude: anti });
    }
    let hinv = h
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite { point: Vec::new() })?;
    let mask = |s: &[usize]| s.iter().map(|j| 1usize << (2 * j)).sum::<usize>();
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..=n {
        let sets = subsets(n, p);
        for jset in &sets {
            let aj = c.coeff_by_mask(mask(jset));
            if aj.norm_sqr() == 0.0 {
                continue;
            }
            for kset in &sets {
                let ak = c.coeff_by_mask(mask(kset));
                if ak.norm_sqr() == 0.0 {
                    continue;
                }
                let minor = CMatrix::from_fn(p, p, |r, s| hinv[(kset[r], jset[s])]);
                let det = if p == 0 { Complex64::new(1.0, 0.0) } else { minor.determinant() };
                total += aj * ak.conj() * det;
            }
        }
    }
    Ok(total.re)
}

/// `max |4 h(2w) − h(w)| / max |h(w)|`: zero when the metric is invariant
/// under `z → 2z` (the identification of the Hopf manifold).
pub fn hopf_identification_residual(metric: &dyn HermitianMetricField, w: &[f64]) -> Result<f64> {
    let h1 = metric.eval(w)?;
    let w2: Vec<f64> = w.iter().map(|v| 2.0 * v).collect();
    let h2 = metric.eval(&w2)?;
    let diff = (h2 * Complex64::new(4.0, 0.0) - &h1).iter().map(|c| c.norm()).fold(0.0, f64::max);
    Ok(diff / h1.iter().map(|c| c.norm()).fold(0.0, f64::max))
}
