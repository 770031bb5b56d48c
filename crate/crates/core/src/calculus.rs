//! Central-difference partial derivatives, the exterior derivative of form
//! fields, and the Wirtinger derivatives `∂_j`, `∂_{j̄}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exterior::PolyForm;

/// Chart point with real coordinates `(Re z¹, Im z¹, …, Re zⁿ, Im zⁿ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn from_complex(z: &[Complex64]) -> Self {
        Self(z.iter().flat_map(|c| [c.re, c.im]).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn complex_dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn z(&self, j: usize) -> Complex64 {
        Complex64::new(self.0[2 * j], self.0[2 * j + 1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Complex coordinates of a real coordinate slice.
pub fn complex_coords(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdOrder {
    Second,
    Fourth,
}

impl FdOrder {
    pub fn as_u32(self) -> u32 {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }
}

/// Central-difference stencil configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdConfig {
    pub step: f64,
    pub order: FdOrder,
    /// Combine steps `h` and `h/2` to cancel the leading truncation term.
    pub richardson: bool,
}

impl Default for FdConfig {
    /// `h = 1e-4`, fourth order, no extrapolation.
    fn default() -> Self {
        Self::plain(1e-4, FdOrder::Fourth)
    }
}

impl FdConfig {
    pub fn new(step: f64, order: u32, richardson: bool) -> Result<Self> {
        let order = match order {
            2 => FdOrder::Second,
            4 => FdOrder::Fourth,
            other => {
                return Err(Error::InvalidFdConfig(format!(
                    "order must be 2 or 4, got {other}"
                )))
            }
        };
        let cfg = Self {
            step,
            order,
            richardson,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `h = 2e-3`, fourth order, Richardson on. Meant for identities that nest
    /// two or three derivatives, where a small step loses too many digits.
    pub fn precise() -> Self {
        Self {
            step: 2e-3,
            order: FdOrder::Fourth,
            richardson: true,
        }
    }

    /// Plain stencil without extrapolation.
    pub fn plain(step: f64, order: FdOrder) -> Self {
        Self {
            step,
            order,
            richardson: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidFdConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        Ok(())
    }

    /// Farthest stencil offset in units of coordinate distance.
    pub fn reach(&self) -> f64 {
        match self.order {
            FdOrder::Second => self.step,
            FdOrder::Fourth => 2.0 * self.step,
        }
    }

    fn offsets_and_weights(&self) -> &'static [(f64, f64)] {
        match self.order {
            FdOrder::Second => &[(1.0, 0.5), (-1.0, -0.5)],
            FdOrder::Fourth => &[
                (1.0, 8.0 / 12.0),
                (-1.0, -8.0 / 12.0),
                (2.0, -1.0 / 12.0),
                (-2.0, 1.0 / 12.0),
            ],
        }
    }
}

/// Region where a field may be evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Everywhere,
    /// `|x| ≥ min_radius`.
    Punctured { min_radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Everywhere => true,
            Domain::Punctured { min_radius } => {
                x.iter().map(|v| v * v).sum::<f64>().sqrt() >= *min_radius
            }
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| v >= l && v <= h),
        }
    }
}

/// Vector-space operations needed by the difference stencils.
pub trait Linear: Clone {
    fn zero_like(&self) -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
}

impl Linear for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
}

impl Linear for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
}

impl<T: Linear> Linear for Vec<T> {
    fn zero_like(&self) -> Self {
        self.iter().map(Linear::zero_like).collect()
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (s, v) in self.iter_mut().zip(x) {
            s.axpy(a, v);
        }
    }
}

impl Linear for PolyForm {
    fn zero_like(&self) -> Self {
        PolyForm::zero(self.dim())
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += &x.scale_real(a);
    }
}

fn stencil_derivative<T, F>(
    f: &F,
    x: &[f64],
    m: usize,
    h: f64,
    cfg: &FdConfig,
    domain: &Domain,
) -> Result<T>
where
    T: Linear,
    F: Fn(&[f64]) -> Result<T>,
{
    let mut y = x.to_vec();
    let mut acc: Option<T> = None;
    for &(k, w) in cfg.offsets_and_weights() {
        y[m] = x[m] + k * h;
        if !domain.contains(&y) {
            return Err(Error::OutOfDomain { point: y });
        }
        let v = f(&y)?;
        match acc.as_mut() {
            None => {
                let mut z = v.zero_like();
                z.axpy(w / h, &v);
                acc = Some(z);
            }
            Some(a) => a.axpy(w / h, &v),
        }
    }
    Ok(acc.expect("stencil is nonempty"))
}

/// `∂f/∂x^m` at `x`.
pub fn partial<T, F>(f: &F, x: &[f64], m: usize, cfg: &FdConfig, domain: &Domain) -> Result<T>
where
    T: Linear,
    F: Fn(&[f64]) -> Result<T>,
{
    cfg.validate()?;
    let h = cfg.step;
    let coarse = stencil_derivative(f, x, m, h, cfg, domain)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = stencil_derivative(f, x, m, 0.5 * h, cfg, domain)?;
    let r = 2f64.powi(cfg.order.as_u32() as i32);
    let mut out = fine.zero_like();
    out.axpy(r / (r - 1.0), &fine);
    out.axpy(-1.0 / (r - 1.0), &coarse);
    Ok(out)
}

/// All partial derivatives `[∂_0 f, …, ∂_{d-1} f]`.
pub fn gradient<T, F>(f: &F, x: &[f64], cfg: &FdConfig, domain: &Domain) -> Result<Vec<T>>
where
    T: Linear,
    F: Fn(&[f64]) -> Result<T>,
{
    (0..x.len())
        .map(|m| partial(f, x, m, cfg, domain))
        .collect()
}

/// Exterior derivative `dα = Σ_M dx^M ∧ ∂_M α` of a form field.
pub fn d<F>(field: &F, x: &[f64], cfg: &FdConfig, domain: &Domain) -> Result<PolyForm>
where
    F: Fn(&[f64]) -> Result<PolyForm>,
{
    let grads = gradient(field, x, cfg, domain)?;
    let dim = x.len();
    let mut out = PolyForm::zero(dim);
    for (m, g) in grads.iter().enumerate() {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: g.dim(),
            });
        }
        let dxm = PolyForm::monomial(dim, &[m], Complex64::new(1.0, 0.0));
        out += &dxm.wedge(g)?;
    }
    Ok(out)
}

/// `max |d(d f)|` of a scalar field, both derivatives by differences.
pub fn d_squared_residual<F>(f: &F, x: &[f64], cfg: &FdConfig, domain: &Domain) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let dim = x.len();
    let scalar = |y: &[f64]| Ok(PolyForm::scalar(dim, Complex64::new(f(y)?, 0.0)));
    let first = |y: &[f64]| d(&scalar, y, cfg, domain);
    Ok(d(&first, x, cfg, domain)?.max_abs())
}

/// Holomorphic derivatives `∂_j f = ½(∂_{x_j} − i ∂_{y_j}) f`.
pub fn del_holo<F>(f: &F, x: &[f64], cfg: &FdConfig, domain: &Domain) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64]) -> Result<Complex64>,
{
    let g = gradient(f, x, cfg, domain)?;
    Ok(g.chunks_exact(2)
        .map(|p| (p[0] - Complex64::i() * p[1]) * 0.5)
        .collect())
}

/// Antiholomorphic derivatives `∂_{j̄} f = ½(∂_{x_j} + i ∂_{y_j}) f`.
pub fn del_anti<F>(f: &F, x: &[f64], cfg: &FdConfig, domain: &Domain) -> Result<Vec<Complex64>>
where
    F: Fn(&[f64]) -> Result<Complex64>,
{
    let g = gradient(f, x, cfg, domain)?;
    Ok(g.chunks_exact(2)
        .map(|p| (p[0] + Complex64::i() * p[1]) * 0.5)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn config_validation() {
        assert!(FdConfig::new(1e-3, 3, false).is_err());
        assert!(FdConfig::new(-1e-3, 2, false).is_err());
        assert!(FdConfig::new(1e-3, 4, true).is_ok());
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let f = |_: &[f64]| Ok(PolyForm::monomial(2, &[0], c(3.0)));
        let cfg = FdConfig::plain(1e-4, FdOrder::Fourth);
        let w = d(&f, &[0.3, 0.4], &cfg, &Domain::Everywhere).unwrap();
        assert!(w.max_abs() < 1e-12);
    }

    #[test]
    fn d_of_x2_dx1() {
        // α = x² dx¹ -> dα = dx² ∧ dx¹ = -dx¹ ∧ dx²
        let f = |x: &[f64]| Ok(PolyForm::monomial(2, &[0], c(x[1])));
        for cfg in [
            FdConfig::plain(1e-3, FdOrder::Second),
            FdConfig::plain(1e-3, FdOrder::Fourth),
            FdConfig::default(),
        ] {
            let w = d(&f, &[0.3, 0.4], &cfg, &Domain::Everywhere).unwrap();
            assert!((w.coefficient(&[0, 1]) - c(-1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn wirtinger_derivatives() {
        let cfg = FdConfig::default();
        let dom = Domain::Everywhere;
        let x = [0.7, -0.2];
        let z = |x: &[f64]| Ok(Complex64::new(x[0], x[1]));
        assert!((del_holo(&z, &x, &cfg, &dom).unwrap()[0] - c(1.0)).norm() < 1e-12);
        assert!(del_anti(&z, &x, &cfg, &dom).unwrap()[0].norm() < 1e-12);
        let zz = |x: &[f64]| Ok(c(x[0] * x[0] + x[1] * x[1]));
        let expect = Complex64::new(0.7, 0.2); // z̄
        assert!((del_holo(&zz, &x, &cfg, &dom).unwrap()[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn del_of_log_norm_on_hopf_chart() {
        // f = ln(z̄z) at z = (1, 0): ∂_1 f = z̄_1/(z̄z) = 1
        let f = |x: &[f64]| Ok(c(x.iter().map(|v| v * v).sum::<f64>().ln()));
        let cfg = FdConfig::default();
        let dom = Domain::Punctured { min_radius: 0.5 };
        let g = del_holo(&f, &[1.0, 0.0, 0.0, 0.0], &cfg, &dom).unwrap();
        assert!((g[0] - c(1.0)).norm() < 1e-12);
        assert!(g[1].norm() < 1e-12);
    }

    #[test]
    fn stencil_outside_domain_is_reported() {
        let f = |_: &[f64]| Ok(0.0);
        let dom = Domain::Punctured { min_radius: 1.0 };
        let cfg = FdConfig::plain(1e-2, FdOrder::Fourth);
        let err = partial(&f, &[1.01, 0.0], 0, &cfg, &dom).unwrap_err();
        assert!(matches!(err, Error::OutOfDomain { .. }));
    }

    #[test]
    fn richardson_raises_accuracy() {
        let f = |x: &[f64]| Ok(x[0].sin());
        let x = [0.4];
        let dom = Domain::Everywhere;
        let plain = FdConfig::plain(5e-2, FdOrder::Second);
        let rich = FdConfig {
            richardson: true,
            ..plain
        };
        let e_plain: f64 = (partial(&f, &x, 0, &plain, &dom).unwrap() - 0.4f64.cos()).abs();
        let e_rich: f64 = (partial(&f, &x, 0, &rich, &dom).unwrap() - 0.4f64.cos()).abs();
        assert!(e_rich < 1e-3 * e_plain);
    }
}
