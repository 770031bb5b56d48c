use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::connection::{Affine, ConnectionChoice};
use super::metric::CMatrix;
use super::Geometry;
use crate::calculus::gradient;
use crate::error::Result;
use crate::exterior::{MatrixPolyForm, PolyForm};

/// Real orthonormal frame: `e^A_M` at `[a*d + m]`, `E_B^M` at `[m*d + b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub d: usize,
    pub e: Vec<f64>,
    pub einv: Vec<f64>,
}

/// Curvature of a spin connection at one point.
#[derive(Clone, Debug)]
pub struct Curvature {
    pub d: usize,
    /// `Ω_M{}^A{}_B` at `[(m*d + a)*d + b]`.
    pub omega: Vec<f64>,
    /// `R_{KM}{}^A{}_B` at `[((k*d + m)*d + a)*d + b]`, antisymmetric in `K, M`.
    pub comps: Vec<f64>,
}

impl Geometry {
    /// Holomorphic vielbein `e^a_j` with `h_{jk̄} = Σ_a e^a_j (e^a_k)^*`:
    /// the transposed lower Cholesky factor, rotated by the gauge if set.
    pub fn holomorphic_vielbein(&self, x: &[f64]) -> Result<CMatrix> {
        let loc = self.local(x)?;
        let n = self.complex_dim();
        let mut c = CMatrix::zeros(n, n);
        for a in 0..n {
            for j in 0..n {
                c[(a, j)] = Complex64::new(
                    loc.e[(2 * a) * 2 * n + 2 * j],
                    loc.e[(2 * a + 1) * 2 * n + 2 * j],
                ) * FRAC_1_SQRT_2;
            }
        }
        Ok(c)
    }

    pub fn vielbein(&self, x: &[f64]) -> Result<Frame> {
        let loc = self.local(x)?;
        Ok(Frame {
            d: self.dim(),
            e: loc.e,
            einv: loc.einv,
        })
    }

    /// Spin-connection components `Ω_M{}^A{}_B`.
    pub fn spin_connection_components(&self, choice: ConnectionChoice, x: &[f64]) -> Result<Vec<f64>> {
        let fo = self.first_order(x)?;
        Ok(fo.spin_connection(&fo.connection(choice.into())))
    }

    /// Spin connection as a matrix of 1-forms `Ω^A{}_B`.
    pub fn spin_connection(&self, choice: ConnectionChoice, x: &[f64]) -> Result<MatrixPolyForm> {
        let om = self.spin_connection_components(choice, x)?;
        Ok(MatrixPolyForm::from_one_form_components(self.dim(), self.dim(), &om))
    }

    pub fn curvature(&self, choice: ConnectionChoice, x: &[f64]) -> Result<Curvature> {
        Ok(self.curvatures(&[choice], x)?.remove(0))
    }

    /// Curvatures of several connections sharing one set of metric evaluations.
    pub fn curvatures(&self, choices: &[ConnectionChoice], x: &[f64]) -> Result<Vec<Curvature>> {
        let specs: Vec<Affine> = choices.iter().map(|&c| c.into()).collect();
        self.curvatures_affine(&specs, x)
    }

    pub(crate) fn curvatures_affine(&self, specs: &[Affine], x: &[f64]) -> Result<Vec<Curvature>> {
        let d = self.dim();
        let block = d * d * d;
        let geo = if self.memo.is_some() {
            self.clone()
        } else {
            self.with_memo()
        };
        let omegas = |y: &[f64]| -> Result<Vec<f64>> {
            let fo = geo.first_order(y)?;
            let mut out = Vec::with_capacity(block * specs.len());
            let lc = fo.christoffel();
            for &s in specs {
                out.extend(fo.spin_connection(&fo.connection_from(s, lc.clone())));
            }
            Ok(out)
        };
        let center = omegas(x)?;
        let grads = gradient(&omegas, x, &self.cfg, &self.domain())?;
        Ok((0..specs.len())
            .map(|i| {
                let om = &center[i * block..(i + 1) * block];
                let dom: Vec<&[f64]> = grads.iter().map(|g| &g[i * block..(i + 1) * block]).collect();
                Curvature {
                    d,
                    omega: om.to_vec(),
                    comps: assemble_curvature(d, om, &dom),
                }
            })
            .collect())
    }
}

/// `R_{KM} = ∂_K Ω_M − ∂_M Ω_K + Ω_K Ω_M − Ω_M Ω_K`.
fn assemble_curvature(d: usize, om: &[f64], dom: &[&[f64]]) -> Vec<f64> {
    let dd = d * d;
    let mut r = vec![0.0; dd * dd];
    for k in 0..d {
        for m in (k + 1)..d {
            let ok = &om[k * dd..(k + 1) * dd];
            let omm = &om[m * dd..(m + 1) * dd];
            for a in 0..d {
                for b in 0..d {
                    let mut v = dom[k][m * dd + a * d + b] - dom[m][k * dd + a * d + b];
                    for c in 0..d {
                        v += ok[a * d + c] * omm[c * d + b] - omm[a * d + c] * ok[c * d + b];
                    }
                    r[(k * d + m) * dd + a * d + b] = v;
                    r[(m * d + k) * dd + a * d + b] = -v;
                }
            }
        }
    }
    r
}

impl Curvature {
    /// Real-frame `2n × 2n` matrix of 2-forms.
    pub fn real_matrix(&self) -> MatrixPolyForm {
        MatrixPolyForm::from_two_form_components(self.d, self.d, &self.comps)
    }

    pub fn omega_matrix(&self) -> MatrixPolyForm {
        MatrixPolyForm::from_one_form_components(self.d, self.d, &self.omega)
    }

    fn complex_blocks(&self) -> (MatrixPolyForm, MatrixPolyForm) {
        let d = self.d;
        let n = d / 2;
        let dd = d * d;
        let i = Complex64::i();
        let mut hol = MatrixPolyForm::zero(n, d);
        let mut mixed = MatrixPolyForm::zero(n, d);
        for a in 0..n {
            for b in 0..n {
                let mut fh = PolyForm::zero(d);
                let mut fm = PolyForm::zero(d);
                for k in 0..d {
                    for m in (k + 1)..d {
                        let r = |p: usize, q: usize| self.comps[(k * d + m) * dd + p * d + q];
                        let (r00, r01) = (r(2 * a, 2 * b), r(2 * a, 2 * b + 1));
                        let (r10, r11) = (r(2 * a + 1, 2 * b), r(2 * a + 1, 2 * b + 1));
                        let mask = (1 << k) | (1 << m);
                        *fh.coeff_by_mask_mut(mask) =
                            0.5 * (Complex64::new(r00 + r11, 0.0) + i * (r01 - r10));
                        *fm.coeff_by_mask_mut(mask) =
                            0.5 * (Complex64::new(r00 - r11, 0.0) - i * (r01 + r10));
                    }
                }
                *hol.entry_mut(a, b) = fh;
                *mixed.entry_mut(a, b) = fm;
            }
        }
        (hol, mixed)
    }

    /// `n × n` block `ℛ_a{}^b = ū_a^A R_A{}^B u_b^B` with `u_b = (e_{2b} + i e_{2b+1})/√2`,
    /// the lower index taken from the row index of `Ω_A{}^B`. With this
    /// placement `F₀ = (i/2) ℛ_a{}^a` on Kähler metrics.
    pub fn holomorphic_block(&self) -> MatrixPolyForm {
        self.complex_blocks().0
    }

    /// Largest coefficient of the blocks mixing holomorphic and
    /// antiholomorphic frame directions.
    pub fn mixed_magnitude(&self) -> f64 {
        self.complex_blocks().1.max_abs()
    }

    /// `R_{PQKM} = e^A_P R_{KM}{}^A{}_B e^B_Q` at `[((p*d + q)*d + k)*d + m]`.
    pub fn riemann_lowered(&self, frame: &Frame) -> Vec<f64> {
        let d = self.d;
        let dd = d * d;
        let mut out = vec![0.0; dd * dd];
        for km in 0..dd {
            let rk = &self.comps[km * dd..(km + 1) * dd];
            // tmp[a][q] = Σ_b R^a_b e^b_q
            let mut tmp = vec![0.0; dd];
            for a in 0..d {
                for q in 0..d {
                    tmp[a * d + q] = (0..d).map(|b| rk[a * d + b] * frame.e[b * d + q]).sum();
                }
            }
            for p in 0..d {
                for q in 0..d {
                    out[(p * d + q) * dd + km] =
                        (0..d).map(|a| frame.e[a * d + p] * tmp[a * d + q]).sum();
                }
            }
        }
        out
    }
}
