use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use super::metric::{cholesky, lower_triangular_inverse, real_metric, realify, CMatrix};
use super::Geometry;
use crate::calculus::gradient;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConnectionChoice {
    LeviCivita,
    Bismut,
    Chern,
}

impl ConnectionChoice {
    pub const ALL: [ConnectionChoice; 3] = [
        ConnectionChoice::LeviCivita,
        ConnectionChoice::Bismut,
        ConnectionChoice::Chern,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConnectionChoice::LeviCivita => "levi-civita",
            ConnectionChoice::Bismut => "bismut",
            ConnectionChoice::Chern => "chern",
        }
    }

    /// Whether `∇I = 0` holds for every metric.
    pub fn preserves_complex_structure(self) -> bool {
        !matches!(self, ConnectionChoice::LeviCivita)
    }
}

impl fmt::Display for ConnectionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ConnectionChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "levi-civita" | "levicivita" | "lc" => Ok(ConnectionChoice::LeviCivita),
            "bismut" => Ok(ConnectionChoice::Bismut),
            "chern" | "hermitian" => Ok(ConnectionChoice::Chern),
            _ => Err(Error::UnknownConnection(s.to_string())),
        }
    }
}

/// Connection coefficients to build: a named connection, or
/// `Γ + s·½ g^{PQ} C_{QMN}` for an arbitrary torsion sign `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Affine {
    Named(ConnectionChoice),
    Contorted(f64),
}

impl From<ConnectionChoice> for Affine {
    fn from(c: ConnectionChoice) -> Self {
        Affine::Named(c)
    }
}

/// Pointwise metric data without derivatives.
pub(crate) struct Local {
    pub h: CMatrix,
    pub g: Vec<f64>,
    pub e: Vec<f64>,
    pub einv: Vec<f64>,
    pub ln_det_h: f64,
}

/// Metric, frame and their first derivatives at one point.
#[derive(Clone, Debug)]
pub struct FirstOrder {
    pub n: usize,
    pub d: usize,
    pub h: CMatrix,
    pub hinv: CMatrix,
    pub g: Vec<f64>,
    pub ginv: Vec<f64>,
    /// `e^A_M` at `[a*d + m]`.
    pub e: Vec<f64>,
    /// `E_B^M` at `[m*d + b]`.
    pub einv: Vec<f64>,
    /// `∂_K g_{MN}` at `[(k*d + m)*d + n]`.
    pub dg: Vec<f64>,
    /// `∂_K E_B^M` at `[(k*d + m)*d + b]`.
    pub deinv: Vec<f64>,
    /// Holomorphic derivative `∂_k h_{jl̄}` at `[(k*n + j)*n + l]`.
    pub dh: Vec<Complex64>,
}

fn i_partner(q: usize) -> (usize, f64) {
    // I_Q^P is nonzero only for P = Q ^ 1: +1 on even Q, -1 on odd Q.
    (q ^ 1, if q.is_multiple_of(2) { 1.0 } else { -1.0 })
}

/// `∂w^α/∂x^M` for `w = (z_j, z̄_j)` pairs.
pub(crate) fn w_of_x(alpha: usize, m: usize) -> Complex64 {
    if alpha / 2 != m / 2 {
        return Complex64::new(0.0, 0.0);
    }
    let sign = if alpha.is_multiple_of(2) { 1.0 } else { -1.0 };
    if m.is_multiple_of(2) {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, sign)
    }
}

/// `∂x^M/∂w^α`.
pub(crate) fn x_of_w(m: usize, alpha: usize) -> Complex64 {
    if alpha / 2 != m / 2 {
        return Complex64::new(0.0, 0.0);
    }
    let sign = if alpha.is_multiple_of(2) { -1.0 } else { 1.0 };
    if m.is_multiple_of(2) {
        Complex64::new(0.5, 0.0)
    } else {
        Complex64::new(0.0, 0.5 * sign)
    }
}

impl Geometry {
    pub(crate) fn local(&self, x: &[f64]) -> Result<Local> {
        let h = self.metric_at(x)?;
        let l = cholesky(&h, x)?;
        let ln_det_h = 2.0 * (0..l.nrows()).map(|j| l[(j, j)].re.ln()).sum::<f64>();
        // Holomorphic vielbein e^a_j = L_{ja}, rotated by the optional gauge.
        let (c, cinv) = match &self.gauge {
            None => (l.transpose(), lower_triangular_inverse(&l).transpose()),
            Some(gauge) => {
                let c = gauge(x) * l.transpose();
                let cinv = c
                    .clone()
                    .try_inverse()
                    .ok_or_else(|| Error::NotPositiveDefinite { point: x.to_vec() })?;
                (c, cinv)
            }
        };
        let e = realify(&c).into_iter().map(|v| v * SQRT_2).collect();
        let einv = realify(&cinv).into_iter().map(|v| v / SQRT_2).collect();
        let g = real_metric(&h);
        Ok(Local {
            h,
            g,
            e,
            einv,
            ln_det_h,
        })
    }

    /// `[g, E⁻¹, Re h, Im h, e, ln det h]` flattened, matrices row-major.
    pub(crate) fn local_flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.memoized_flat(x, || self.local_flat_uncached(x))
    }

    fn local_flat_uncached(&self, x: &[f64]) -> Result<Vec<f64>> {
        let l = self.local(x)?;
        let n = l.h.nrows();
        let mut v = Vec::with_capacity(l.g.len() + l.einv.len() + l.e.len() + 2 * n * n);
        v.extend_from_slice(&l.g);
        v.extend_from_slice(&l.einv);
        v.extend(l.h.transpose().iter().map(|c| c.re));
        v.extend(l.h.transpose().iter().map(|c| c.im));
        v.extend_from_slice(&l.e);
        v.push(l.ln_det_h);
        Ok(v)
    }

    /// Metric, vielbein and their first derivatives at `x`.
    pub fn first_order(&self, x: &[f64]) -> Result<FirstOrder> {
        let n = self.complex_dim();
        let d = 2 * n;
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: x.len(),
            });
        }
        let flat = |y: &[f64]| self.local_flat(y);
        let center = flat(x)?;
        let grads = gradient(&flat, x, &self.cfg, &self.domain())?;
        let dd = d * d;
        let nn = n * n;
        let mut dg = vec![0.0; d * dd];
        let mut deinv = vec![0.0; d * dd];
        for (k, gk) in grads.iter().enumerate() {
            dg[k * dd..(k + 1) * dd].copy_from_slice(&gk[..dd]);
            deinv[k * dd..(k + 1) * dd].copy_from_slice(&gk[dd..2 * dd]);
        }
        let mut dh = vec![Complex64::new(0.0, 0.0); n * nn];
        for k in 0..n {
            let gx = &grads[2 * k];
            let gy = &grads[2 * k + 1];
            for jl in 0..nn {
                let (re_x, im_x) = (gx[2 * dd + jl], gx[2 * dd + nn + jl]);
                let (re_y, im_y) = (gy[2 * dd + jl], gy[2 * dd + nn + jl]);
                dh[k * nn + jl] = Complex64::new(0.5 * (re_x + im_y), 0.5 * (im_x - re_y));
            }
        }
        let h = CMatrix::from_fn(n, n, |j, l| {
            Complex64::new(center[2 * dd + j * n + l], center[2 * dd + nn + j * n + l])
        });
        let hinv = h
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotPositiveDefinite { point: x.to_vec() })?;
        let g = center[..dd].to_vec();
        let einv = center[dd..2 * dd].to_vec();
        // g^{MN} = E_A^M E_A^N
        let mut ginv = vec![0.0; dd];
        for m in 0..d {
            for nn in 0..d {
                ginv[m * d + nn] = (0..d).map(|a| einv[m * d + a] * einv[nn * d + a]).sum();
            }
        }
        Ok(FirstOrder {
            n,
            d,
            h,
            hinv,
            g,
            ginv,
            e: center[2 * dd + 2 * nn..3 * dd + 2 * nn].to_vec(),
            einv,
            dg,
            deinv,
            dh,
        })
    }

    /// Levi-Civita coefficients `Γ^P_{MN}`.
    pub fn christoffel(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.first_order(x)?.christoffel())
    }

    /// `C_{QMN}` from the real-frame expression in `∇I`.
    pub fn contorsion_real(&self, x: &[f64]) -> Result<Vec<f64>> {
        let fo = self.first_order(x)?;
        let gamma = fo.christoffel();
        Ok(fo.contorsion_real(&gamma))
    }

    /// `C_{QMN}` from the holomorphic-coordinate expression in `∂h`.
    pub fn contorsion_holo(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.first_order(x)?.contorsion_holo())
    }

    /// Coefficients `γ^P_{MN}` of the chosen connection.
    pub fn connection(&self, choice: ConnectionChoice, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.first_order(x)?.connection(choice.into()))
    }
}

impl FirstOrder {
    pub fn christoffel(&self) -> Vec<f64> {
        let d = self.d;
        let mut lower = vec![0.0; d * d * d];
        for q in 0..d {
            for m in 0..d {
                for n in 0..d {
                    lower[(q * d + m) * d + n] = 0.5
                        * (self.dg[(m * d + q) * d + n] + self.dg[(n * d + q) * d + m]
                            - self.dg[(q * d + m) * d + n]);
                }
            }
        }
        raise_first(&self.ginv, &lower, d)
    }

    /// `I_{RT} = I_R^S g_{ST}`.
    fn i_lowered(&self) -> Vec<f64> {
        let d = self.d;
        let mut il = vec![0.0; d * d];
        for r in 0..d {
            let (s, sign) = i_partner(r);
            for t in 0..d {
                il[r * d + t] = sign * self.g[s * d + t];
            }
        }
        il
    }

    /// `C_{QMN} = I_Q^P I_M^R I_N^T (∇_P I_{RT} + ∇_R I_{TP} + ∇_T I_{PR})`.
    pub fn contorsion_real(&self, gamma: &[f64]) -> Vec<f64> {
        let d = self.d;
        let il = self.i_lowered();
        let mut nabla = vec![0.0; d * d * d];
        for p in 0..d {
            for r in 0..d {
                let (rs, rsign) = i_partner(r);
                for t in 0..d {
                    let mut v = rsign * self.dg[(p * d + rs) * d + t];
                    for s in 0..d {
                        v -= gamma[(s * d + p) * d + r] * il[s * d + t];
                        v -= gamma[(s * d + p) * d + t] * il[r * d + s];
                    }
                    nabla[(p * d + r) * d + t] = v;
                }
            }
        }
        let at = |p: usize, r: usize, t: usize| nabla[(p * d + r) * d + t];
        let mut c = vec![0.0; d * d * d];
        for q in 0..d {
            let (p, sq) = i_partner(q);
            for m in 0..d {
                let (r, sm) = i_partner(m);
                for n in 0..d {
                    let (t, sn) = i_partner(n);
                    c[(q * d + m) * d + n] =
                        sq * sm * sn * (at(p, r, t) + at(r, t, p) + at(t, p, r));
                }
            }
        }
        c
    }

    /// `C_{jkl̄} = ∂_k h_{jl̄} − ∂_j h_{kl̄}` and its permutations and
    /// conjugates, converted to real components.
    pub fn contorsion_holo(&self) -> Vec<f64> {
        let (n, d) = (self.n, self.d);
        let zero = Complex64::new(0.0, 0.0);
        let mut cc = vec![zero; d * d * d];
        let idx = |a: usize, b: usize, c: usize| (a * d + b) * d + c;
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let v = self.dh[(k * n + j) * n + l] - self.dh[(j * n + k) * n + l];
                    let (zj, zk, zl) = (2 * j, 2 * k, 2 * l);
                    let (bj, bk, bl) = (zj + 1, zk + 1, zl + 1);
                    cc[idx(zj, zk, bl)] = v;
                    cc[idx(zj, bl, zk)] = -v;
                    cc[idx(bl, zj, zk)] = v;
                    cc[idx(bj, bk, zl)] = v.conj();
                    cc[idx(bj, zl, bk)] = -v.conj();
                    cc[idx(zl, bj, bk)] = v.conj();
                }
            }
        }
        let mut out = vec![0.0; d * d * d];
        for q in 0..d {
            for m in 0..d {
                for nn in 0..d {
                    let mut acc = zero;
                    for a in [2 * (q / 2), 2 * (q / 2) + 1] {
                        for b in [2 * (m / 2), 2 * (m / 2) + 1] {
                            for c in [2 * (nn / 2), 2 * (nn / 2) + 1] {
                                let v = cc[idx(a, b, c)];
                                if v != zero {
                                    acc += w_of_x(a, q) * w_of_x(b, m) * w_of_x(c, nn) * v;
                                }
                            }
                        }
                    }
                    out[idx(q, m, nn)] = acc.re;
                }
            }
        }
        out
    }

    /// Chern connection: `Γ^q_{nm} = ∂_n h_{mp̄} h^{p̄q}` and its conjugate.
    pub fn chern(&self) -> Vec<f64> {
        let (n, d) = (self.n, self.d);
        let mut hol = vec![Complex64::new(0.0, 0.0); n * n * n];
        for q in 0..n {
            for a in 0..n {
                for m in 0..n {
                    hol[(q * n + a) * n + m] = (0..n)
                        .map(|p| self.dh[(a * n + m) * n + p] * self.hinv[(p, q)])
                        .sum();
                }
            }
        }
        let mut out = vec![0.0; d * d * d];
        for pp in 0..d {
            let q = pp / 2;
            let xq = x_of_w(pp, 2 * q);
            for mm in 0..d {
                let a = mm / 2;
                let wa = w_of_x(2 * a, mm);
                for nn in 0..d {
                    let m = nn / 2;
                    let v = xq * wa * w_of_x(2 * m, nn) * hol[(q * n + a) * n + m];
                    out[(pp * d + mm) * d + nn] = 2.0 * v.re;
                }
            }
        }
        out
    }

    pub(crate) fn connection(&self, which: Affine) -> Vec<f64> {
        match which {
            Affine::Named(ConnectionChoice::Chern) => self.chern(),
            _ => self.connection_from(which, self.christoffel()),
        }
    }

    /// `connection` given the Levi-Civita coefficients.
    pub(crate) fn connection_from(&self, which: Affine, gamma: Vec<f64>) -> Vec<f64> {
        let sign = match which {
            Affine::Named(ConnectionChoice::Chern) => return self.chern(),
            Affine::Named(ConnectionChoice::LeviCivita) => return gamma,
            Affine::Named(_) => 1.0,
            Affine::Contorted(s) => s,
        };
        let c = self.contorsion_real(&gamma);
        let k = raise_first(&self.ginv, &c, self.d);
        gamma
            .iter()
            .zip(&k)
            .map(|(g, k)| g + 0.5 * sign * k)
            .collect()
    }

    /// `Ω_M{}^A{}_B = e^A_N (∂_M E_B^N + γ^N_{MK} E_B^K)`.
    pub fn spin_connection(&self, gamma: &[f64]) -> Vec<f64> {
        let d = self.d;
        let mut nabla_e = vec![0.0; d * d * d];
        for m in 0..d {
            for nn in 0..d {
                for b in 0..d {
                    let mut v = self.deinv[(m * d + nn) * d + b];
                    for k in 0..d {
                        v += gamma[(nn * d + m) * d + k] * self.einv[k * d + b];
                    }
                    nabla_e[(m * d + nn) * d + b] = v;
                }
            }
        }
        let mut om = vec![0.0; d * d * d];
        for m in 0..d {
            for a in 0..d {
                for b in 0..d {
                    om[(m * d + a) * d + b] = (0..d)
                        .map(|nn| self.e[a * d + nn] * nabla_e[(m * d + nn) * d + b])
                        .sum();
                }
            }
        }
        om
    }
}

/// `T^P_{MN} = a^{PQ} T_{QMN}`.
pub(crate) fn raise_first(a: &[f64], t: &[f64], d: usize) -> Vec<f64> {
    let dd = d * d;
    let mut out = vec![0.0; d * dd];
    for p in 0..d {
        for q in 0..d {
            let w = a[p * d + q];
            if w == 0.0 {
                continue;
            }
            for mn in 0..dd {
                out[p * dd + mn] += w * t[q * dd + mn];
            }
        }
    }
    out
}
