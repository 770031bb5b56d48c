//! Pointwise residuals of the structure identities.

use num_complex::Complex64;

use super::connection::{x_of_w, w_of_x, Affine, ConnectionChoice, FirstOrder};
use super::metric::complex_structure;
use super::Geometry;
use crate::calculus::gradient;
use crate::error::Result;
use crate::exterior::{MatrixPolyForm, PolyForm};

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(f64::abs).fold(0.0, f64::max)
}

/// Pair-exchange defect of the curvature tensors of `Γ ± ½g⁻¹C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSymmetry {
    /// `max |R_{PQKM}(+C) − R_{KMPQ}(−C)|`.
    pub raw: f64,
    /// The same after adding `½ (dC)_{PQKM}`, which vanishes for closed torsion.
    pub corrected: f64,
    /// `max |dC|`.
    pub dc: f64,
}

impl FirstOrder {
    /// `max |∇_P g_{MN}|` for coefficients `gamma`.
    pub fn metric_residual(&self, gamma: &[f64]) -> f64 {
        let d = self.d;
        let mut worst: f64 = 0.0;
        for p in 0..d {
            for m in 0..d {
                for n in 0..d {
                    let mut v = self.dg[(p * d + m) * d + n];
                    for s in 0..d {
                        v -= gamma[(s * d + p) * d + m] * self.g[s * d + n];
                        v -= gamma[(s * d + p) * d + n] * self.g[m * d + s];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// `max |∇_P I_M^N|` for coefficients `gamma`.
    pub fn complex_structure_residual(&self, gamma: &[f64]) -> f64 {
        let d = self.d;
        let i = complex_structure(self.n);
        let mut worst: f64 = 0.0;
        for p in 0..d {
            for m in 0..d {
                for n in 0..d {
                    let mut v = 0.0;
                    for s in 0..d {
                        v += gamma[(n * d + p) * d + s] * i[m * d + s];
                        v -= gamma[(s * d + p) * d + m] * i[s * d + n];
                    }
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    /// Complex components `Γ^α_{βγ}` in the `(z_j, z̄_j)` index layout.
    pub fn complex_components(&self, gamma: &[f64]) -> Vec<Complex64> {
        let d = self.d;
        let mut out = vec![Complex64::new(0.0, 0.0); d * d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for p in [2 * (a / 2), 2 * (a / 2) + 1] {
                        for m in [2 * (b / 2), 2 * (b / 2) + 1] {
                            for n in [2 * (c / 2), 2 * (c / 2) + 1] {
                                acc += w_of_x(a, p)
                                    * x_of_w(m, b)
                                    * x_of_w(n, c)
                                    * gamma[(p * d + m) * d + n];
                            }
                        }
                    }
                    out[(a * d + b) * d + c] = acc;
                }
            }
        }
        out
    }

    /// Largest deviation of the Levi-Civita complex components from
    /// `Γ^p_{mn} = ½h^{q̄p}(∂_m h_{nq̄} + ∂_n h_{mq̄})` and
    /// `Γ^{p̄}_{nm̄} = ½h^{p̄q}(∂_n h_{qm̄} − ∂_q h_{nm̄})`, together with the
    /// largest mixed component.
    pub fn christoffel_holo_residual(&self) -> (f64, f64) {
        let (n, d) = (self.n, self.d);
        let gc = self.complex_components(&self.christoffel());
        let at = |a: usize, b: usize, c: usize| gc[(a * d + b) * d + c];
        let dh = |k: usize, j: usize, l: usize| self.dh[(k * n + j) * n + l];
        let mut worst: f64 = 0.0;
        let mut mixed: f64 = 0.0;
        for p in 0..n {
            for m in 0..n {
                for nn in 0..n {
                    let pure: Complex64 = (0..n)
                        .map(|q| self.hinv[(q, p)] * 0.5 * (dh(m, nn, q) + dh(nn, m, q)))
                        .sum();
                    worst = worst.max((at(2 * p, 2 * m, 2 * nn) - pure).norm());
                    // Γ^{p̄}_{n m̄}: ∂_n h_{q m̄} and ∂_q h_{n m̄}
                    let mix: Complex64 = (0..n)
                        .map(|q| self.hinv[(p, q)] * 0.5 * (dh(nn, q, m) - dh(q, nn, m)))
                        .sum();
                    let got = at(2 * p + 1, 2 * nn, 2 * m + 1);
                    worst = worst.max((got - mix).norm());
                    worst = worst.max((at(2 * p + 1, 2 * m + 1, 2 * nn) - mix).norm());
                    mixed = mixed.max(got.norm());
                }
            }
        }
        (worst, mixed)
    }
}

impl Geometry {
    pub fn metric_compatibility(&self, choice: ConnectionChoice, x: &[f64]) -> Result<f64> {
        let fo = self.first_order(x)?;
        Ok(fo.metric_residual(&fo.connection(choice.into())))
    }

    pub fn complex_structure_compatibility(&self, choice: ConnectionChoice, x: &[f64]) -> Result<f64> {
        let fo = self.first_order(x)?;
        Ok(fo.complex_structure_residual(&fo.connection(choice.into())))
    }

    /// `max |C_{QMN} + C_{MQN}|, |C_{QMN} + C_{QNM}|` of the real-frame contorsion.
    pub fn contorsion_antisymmetry(&self, x: &[f64]) -> Result<f64> {
        let c = self.contorsion_real(x)?;
        let d = self.dim();
        let at = |q: usize, m: usize, n: usize| c[(q * d + m) * d + n];
        let mut worst: f64 = 0.0;
        for q in 0..d {
            for m in 0..d {
                for n in 0..d {
                    worst = worst
                        .max((at(q, m, n) + at(m, q, n)).abs())
                        .max((at(q, m, n) + at(q, n, m)).abs());
                }
            }
        }
        Ok(worst)
    }

    /// `max |C_real − C_holo|`.
    pub fn contorsion_agreement(&self, x: &[f64]) -> Result<f64> {
        let fo = self.first_order(x)?;
        let creal = fo.contorsion_real(&fo.christoffel());
        let cholo = fo.contorsion_holo();
        Ok(max_abs(creal.iter().zip(&cholo).map(|(a, b)| a - b)))
    }

    /// `max |de^A + Ω^A{}_B ∧ e^B − T^A|` where `T^A = ½ e^A_P T^P_{MN} dx^M∧dx^N`
    /// is the torsion of the chosen connection (zero for Levi-Civita).
    pub fn maurer_cartan_residual(&self, choice: ConnectionChoice, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        let de = gradient(&|y: &[f64]| Ok(self.local(y)?.e), x, &self.cfg, &self.domain())?;
        let fo = self.first_order(x)?;
        let gamma = fo.connection(choice.into());
        let om = fo.spin_connection(&gamma);
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for m in 0..d {
                for n in (m + 1)..d {
                    let mut v = de[m][a * d + n] - de[n][a * d + m];
                    for b in 0..d {
                        v += om[(m * d + a) * d + b] * fo.e[b * d + n]
                            - om[(n * d + a) * d + b] * fo.e[b * d + m];
                    }
                    let t: f64 = (0..d)
                        .map(|p| {
                            fo.e[a * d + p]
                                * (gamma[(p * d + m) * d + n] - gamma[(p * d + n) * d + m])
                        })
                        .sum();
                    worst = worst.max((v - t).abs());
                }
            }
        }
        Ok(worst)
    }

    /// `max |dℛ − ℛ∧Ω + Ω∧ℛ|` over all matrix entries.
    pub fn bianchi_residual(&self, choice: ConnectionChoice, x: &[f64]) -> Result<f64> {
        let d = self.dim();
        let dd = d * d;
        let spec = [Affine::from(choice)];
        let field = |y: &[f64]| Ok(self.curvatures_affine(&spec, y)?.remove(0).comps);
        let grads = gradient(&field, x, &self.cfg, &self.domain())?;
        let curv = self.curvatures_affine(&spec, x)?.remove(0);
        let r = curv.real_matrix();
        let om = curv.omega_matrix();
        let mut dr = MatrixPolyForm::zero(d, d);
        for (k, g) in grads.iter().enumerate() {
            let dk = MatrixPolyForm::from_two_form_components(d, d, g);
            let dxk = PolyForm::monomial(d, &[k], Complex64::new(1.0, 0.0));
            for a in 0..d {
                for b in 0..d {
                    let add = dxk.wedge_unpruned(dk.entry(a, b));
                    *dr.entry_mut(a, b) += &add;
                }
            }
        }
        debug_assert_eq!(grads[0].len(), dd * dd);
        let res = dr.sub(&r.wedge(&om)?).add(&om.wedge(&r)?);
        Ok(res.max_abs())
    }

    /// Largest coefficient of the mixed curvature blocks.
    pub fn mixed_curvature(&self, choice: ConnectionChoice, x: &[f64]) -> Result<f64> {
        Ok(self.curvature(choice, x)?.mixed_magnitude())
    }

    /// Exchange symmetry `R_{PQKM}(C) = R_{KMPQ}(−C)` of the curvature of
    /// `Γ ± ½g⁻¹C`.
    pub fn riemann_torsion_symmetry_check(&self, x: &[f64]) -> Result<PairSymmetry> {
        let d = self.dim();
        let dd = d * d;
        let curv = self.curvatures_affine(&[Affine::Contorted(1.0), Affine::Contorted(-1.0)], x)?;
        let frame = self.vielbein(x)?;
        let rp = curv[0].riemann_lowered(&frame);
        let rm = curv[1].riemann_lowered(&frame);
        let dc = self.d_contorsion(x)?;
        let mut raw: f64 = 0.0;
        let mut corrected: f64 = 0.0;
        for pq in 0..dd {
            for km in 0..dd {
                let diff = rp[pq * dd + km] - rm[km * dd + pq];
                raw = raw.max(diff.abs());
                corrected = corrected.max((diff + 0.5 * dc[pq * dd + km]).abs());
            }
        }
        Ok(PairSymmetry {
            raw,
            corrected,
            dc: max_abs(dc.iter().copied()),
        })
    }

    /// `(dC)_{ABCE} = ∂_A C_{BCE} − ∂_B C_{ACE} + ∂_C C_{ABE} − ∂_E C_{ABC}`.
    pub fn d_contorsion(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = self.dim();
        let grads = gradient(&|y: &[f64]| self.contorsion_real(y), x, &self.cfg, &self.domain())?;
        let c = |k: usize, a: usize, b: usize, e: usize| grads[k][(a * d + b) * d + e];
        let mut out = vec![0.0; d * d * d * d];
        for a in 0..d {
            for b in 0..d {
                for cc in 0..d {
                    for e in 0..d {
                        out[((a * d + b) * d + cc) * d + e] =
                            c(a, b, cc, e) - c(b, a, cc, e) + c(cc, a, b, e) - c(e, a, b, cc);
                    }
                }
            }
        }
        Ok(out)
    }
}
