use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::calculus::Domain;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative Hermiticity defect tolerated at evaluation time.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Hermitian metric `h_{jk̄}(x)` on a chart of `C^n`.
pub trait HermitianMetricField: Send + Sync {
    fn complex_dim(&self) -> usize;

    /// Raw metric matrix at `x` (no validation).
    fn eval(&self, x: &[f64]) -> Result<CMatrix>;

    fn domain(&self) -> Domain {
        Domain::Everywhere
    }
}

type MetricFn = dyn Fn(&[f64]) -> CMatrix + Send + Sync;

/// Metric given by a closure.
#[derive(Clone)]
pub struct FnMetric {
    n: usize,
    domain: Domain,
    f: Arc<MetricFn>,
}

impl FnMetric {
    pub fn new(n: usize, domain: Domain, f: impl Fn(&[f64]) -> CMatrix + Send + Sync + 'static) -> Self {
        Self {
            n,
            domain,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for FnMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnMetric")
            .field("n", &self.n)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl HermitianMetricField for FnMetric {
    fn complex_dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> Result<CMatrix> {
        Ok((self.f)(x))
    }

    fn domain(&self) -> Domain {
        self.domain.clone()
    }
}

/// Real function of the chart coordinates.
pub type ScalarField = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `h → (1 + t·φ(x)) h`.
#[derive(Clone)]
pub struct ConformallyScaled {
    base: Arc<dyn HermitianMetricField>,
    factor: ScalarField,
    t: f64,
}

impl ConformallyScaled {
    pub fn new(
        base: Arc<dyn HermitianMetricField>,
        factor: ScalarField,
        t: f64,
    ) -> Self {
        Self { base, factor, t }
    }
}

impl HermitianMetricField for ConformallyScaled {
    fn complex_dim(&self) -> usize {
        self.base.complex_dim()
    }

    fn eval(&self, x: &[f64]) -> Result<CMatrix> {
        let s = 1.0 + self.t * (self.factor)(x);
        Ok(self.base.eval(x)? * Complex64::new(s, 0.0))
    }

    fn domain(&self) -> Domain {
        self.base.domain()
    }
}

/// Evaluate and validate Hermiticity and positive-definiteness.
pub fn checked_metric(metric: &dyn HermitianMetricField, x: &[f64]) -> Result<CMatrix> {
    let h = metric.eval(x)?;
    let n = metric.complex_dim();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: h.nrows(),
        });
    }
    let scale = h.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let defect = (0..n)
        .flat_map(|j| (0..n).map(move |k| (j, k)))
        .map(|(j, k)| (h[(j, k)] - h[(k, j)].conj()).norm())
        .fold(0.0, f64::max);
    if defect.is_nan() || defect > HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE) || !scale.is_finite() {
        return Err(Error::NotHermitian {
            point: x.to_vec(),
            defect,
        });
    }
    Ok(h)
}

/// Lower-triangular `L` with positive diagonal and `h = L L^†`.
pub fn cholesky(h: &CMatrix, x: &[f64]) -> Result<CMatrix> {
    let n = h.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut s = h[(j, j)];
        for k in 0..j {
            s -= l[(j, k)].norm_sqr();
        }
        if !(s.re > 0.0 && s.re.is_finite() && s.im.abs() <= 1e-12 * s.re) {
            return Err(Error::NotPositiveDefinite { point: x.to_vec() });
        }
        let p = s.re.sqrt();
        l[(j, j)] = Complex64::new(p, 0.0);
        for i in (j + 1)..n {
            let mut v = h[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / p;
        }
    }
    Ok(l)
}

/// Inverse of a lower-triangular matrix with nonzero diagonal.
pub(crate) fn lower_triangular_inverse(l: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut inv = CMatrix::zeros(n, n);
    for c in 0..n {
        inv[(c, c)] = l[(c, c)].inv();
        for r in (c + 1)..n {
            let mut v = Complex64::new(0.0, 0.0);
            for k in c..r {
                v -= l[(r, k)] * inv[(k, c)];
            }
            inv[(r, c)] = v / l[(r, r)];
        }
    }
    inv
}

/// Real metric `g_{MN}` (row-major `2n × 2n`) for `ds² = 2 h_{jk̄} dz^j dz̄^k`.
pub fn real_metric(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    let d = 2 * n;
    let mut g = vec![0.0; d * d];
    for j in 0..n {
        for k in 0..n {
            let a = h[(j, k)].re;
            let b = h[(j, k)].im;
            g[(2 * j) * d + 2 * k] = 2.0 * a;
            g[(2 * j + 1) * d + 2 * k + 1] = 2.0 * a;
            g[(2 * j) * d + 2 * k + 1] = 2.0 * b;
            g[(2 * j + 1) * d + 2 * k] = -2.0 * b;
        }
    }
    g
}

/// Complex structure as the mixed tensor `I_M^N`, row `M`, column `N`.
///
/// In holomorphic coordinates this is `I_m^n = iδ_m^n`. As a map on tangent
/// vectors (`v^N ↦ v^M I_M^N`) it is the transpose, with 2×2 blocks
/// `[[0, -1], [1, 0]]`.
pub fn complex_structure(n: usize) -> Vec<f64> {
    let d = 2 * n;
    let mut i = vec![0.0; d * d];
    for j in 0..n {
        i[(2 * j) * d + 2 * j + 1] = 1.0;
        i[(2 * j + 1) * d + 2 * j] = -1.0;
    }
    i
}

/// Real structure `(g_{MN}, I_M^N)` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct RealStructure {
    pub n: usize,
    pub g: Vec<f64>,
    pub i: Vec<f64>,
}

impl RealStructure {
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// `I` acting on tangent-vector components (transpose of `I_M^N`).
    pub fn i_on_vectors(&self) -> Vec<f64> {
        let d = self.dim();
        let mut t = vec![0.0; d * d];
        for m in 0..d {
            for k in 0..d {
                t[k * d + m] = self.i[m * d + k];
            }
        }
        t
    }

    /// `I_{MN} = I_M^P g_{PN}`.
    pub fn i_lowered(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d * d];
        for m in 0..d {
            for n in 0..d {
                out[m * d + n] = (0..d).map(|p| self.i[m * d + p] * self.g[p * d + n]).sum();
            }
        }
        out
    }
}

/// `g` and `I` in real coordinates after validating `h`.
pub fn assemble_real(metric: &dyn HermitianMetricField, x: &[f64]) -> Result<RealStructure> {
    let h = checked_metric(metric, x)?;
    cholesky(&h, x)?;
    Ok(RealStructure {
        n: h.nrows(),
        g: real_metric(&h),
        i: complex_structure(h.nrows()),
    })
}

/// Real `2n × 2n` representation of a complex `n × n` matrix acting on
/// `(Re, Im)` pairs: `a + ib ↦ [[a, -b], [b, a]]`.
pub fn realify(c: &CMatrix) -> Vec<f64> {
    let n = c.nrows();
    let d = 2 * n;
    let mut r = vec![0.0; d * d];
    for a in 0..n {
        for j in 0..n {
            let v = c[(a, j)];
            r[(2 * a) * d + 2 * j] = v.re;
            r[(2 * a) * d + 2 * j + 1] = -v.im;
            r[(2 * a + 1) * d + 2 * j] = v.im;
            r[(2 * a + 1) * d + 2 * j + 1] = v.re;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize) -> FnMetric {
        FnMetric::new(n, Domain::Everywhere, move |_| CMatrix::identity(n, n))
    }

    #[test]
    fn flat_metric_real_form() {
        let rs = assemble_real(&flat(1), &[0.3, 0.1]).unwrap();
        assert_eq!(rs.g, vec![2.0, 0.0, 0.0, 2.0]);
        assert_eq!(rs.i_on_vectors(), vec![0.0, -1.0, 1.0, 0.0]);
    }

    #[test]
    fn i_squares_to_minus_one_and_is_g_antisymmetric() {
        let m = FnMetric::new(2, Domain::Everywhere, |x| {
            let off = Complex64::new(0.3 * x[0], 0.2 * x[3]);
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(2.0 + x[1] * x[1], 0.0),
                    off,
                    off.conj(),
                    Complex64::new(1.5, 0.0),
                ],
            )
        });
        let rs = assemble_real(&m, &[0.4, -0.7, 0.2, 0.9]).unwrap();
        let d = 4;
        for a in 0..d {
            for b in 0..d {
                let sq: f64 = (0..d).map(|k| rs.i[a * d + k] * rs.i[k * d + b]).sum();
                let expect = if a == b { -1.0 } else { 0.0 };
                assert!((sq - expect).abs() < 1e-15);
            }
        }
        let il = rs.i_lowered();
        for a in 0..d {
            for b in 0..d {
                assert!((il[a * d + b] + il[b * d + a]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn non_positive_definite_is_rejected() {
        let m = FnMetric::new(1, Domain::Everywhere, |_| {
            CMatrix::from_element(1, 1, Complex64::new(-1.0, 0.0))
        });
        let r = assemble_real(&m, &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::NotPositiveDefinite { .. })), "{r:?}");
    }

    #[test]
    fn cholesky_factors_and_inverts() {
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[
                Complex64::new(3.0, 0.0),
                Complex64::new(0.5, 0.4),
                Complex64::new(-0.2, 0.1),
                Complex64::new(0.5, -0.4),
                Complex64::new(2.0, 0.0),
                Complex64::new(0.3, -0.7),
                Complex64::new(-0.2, -0.1),
                Complex64::new(0.3, 0.7),
                Complex64::new(1.5, 0.0),
            ],
        );
        let l = cholesky(&h, &[0.0; 6]).unwrap();
        assert!((&l * l.adjoint() - &h).norm() < 1e-14);
        let li = lower_triangular_inverse(&l);
        assert!((&l * li - CMatrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let m = FnMetric::new(2, Domain::Everywhere, |_| {
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(1.0, 0.0),
                    Complex64::new(0.1, 0.0),
                    Complex64::new(0.2, 0.0),
                    Complex64::new(1.0, 0.0),
                ],
            )
        });
        assert!(matches!(
            checked_metric(&m, &[0.0; 4]),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn realify_is_multiplicative() {
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 2.0),
                Complex64::new(0.5, -1.0),
                Complex64::new(0.0, 0.3),
                Complex64::new(-2.0, 0.1),
            ],
        );
        let b = a.adjoint();
        let ra = realify(&a);
        let rb = realify(&b);
        let rab = realify(&(&a * &b));
        let d = 4;
        for r in 0..d {
            for c in 0..d {
                let v: f64 = (0..d).map(|k| ra[r * d + k] * rb[k * d + c]).sum();
                assert!((v - rab[r * d + c]).abs() < 1e-14);
            }
        }
    }
}
