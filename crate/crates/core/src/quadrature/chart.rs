use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::calculus::{gradient, Domain, FdConfig, FdOrder};
use crate::error::Result;

type MapFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type JacFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum Jacobian {
    /// `|det Dφ|` in closed form.
    Analytic(Arc<JacFn>),
    /// `|det Dφ|` by central differences of the map with this step.
    Fd { step: f64 },
}

impl fmt::Debug for Jacobian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Jacobian::Analytic(_) => f.write_str("Analytic"),
            Jacobian::Fd { step } => write!(f, "Fd {{ step: {step} }}"),
        }
    }
}

/// Parameterization of a fundamental domain by the unit cube `[0,1]^d`.
#[derive(Clone)]
pub struct ChartParam {
    pub name: String,
    dim: usize,
    map: Arc<MapFn>,
    jacobian: Jacobian,
    /// Parameters within this distance of a singular face are skipped
    /// (they carry zero weight).
    pub margin: f64,
    /// Coordinates along which the cube is periodic; those faces are not singular.
    periodic: Vec<bool>,
}

impl fmt::Debug for ChartParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartParam")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("jacobian", &self.jacobian)
            .field("margin", &self.margin)
            .finish()
    }
}

impl ChartParam {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        map: Arc<MapFn>,
        jacobian: Jacobian,
        margin: f64,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            map,
            jacobian,
            margin,
            periodic: vec![false; dim],
        }
    }

    pub fn with_periodic(mut self, periodic: Vec<bool>) -> Self {
        assert_eq!(periodic.len(), self.dim);
        self.periodic = periodic;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn jacobian_mode(&self) -> &Jacobian {
        &self.jacobian
    }

    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        (self.map)(u)
    }

    /// Whether `u` lies in the skipped neighbourhood of a singular face.
    pub fn is_singular(&self, u: &[f64]) -> bool {
        u.iter()
            .zip(&self.periodic)
            .any(|(&v, &p)| !p && (v < self.margin || v > 1.0 - self.margin))
    }

    /// `|det Dφ(u)|`.
    pub fn jacobian(&self, u: &[f64]) -> Result<f64> {
        match &self.jacobian {
            Jacobian::Analytic(j) => Ok(j(u)),
            Jacobian::Fd { step } => {
                let cfg = FdConfig::plain(*step, FdOrder::Fourth);
                let cols = gradient(&|v: &[f64]| Ok((self.map)(v)), u, &cfg, &Domain::Everywhere)?;
                let d = self.dim;
                let m = DMatrix::from_fn(d, d, |r, c| cols[c][r]);
                Ok(m.determinant().abs())
            }
        }
    }

    /// `Π_j polar(u_{2j}, u_{2j+1})` with `|z_j| = t/(1−t)`, `arg z_j = 2πs`:
    /// the affine chart of `CPⁿ` up to a null set.
    pub fn cp(n: usize) -> Self {
        let map = move |u: &[f64]| -> Vec<f64> {
            let mut x = Vec::with_capacity(2 * n);
            for j in 0..n {
                let t = u[2 * j];
                let r = t / (1.0 - t);
                let th = TAU * u[2 * j + 1];
                x.push(r * th.cos());
                x.push(r * th.sin());
            }
            x
        };
        let jac = move |u: &[f64]| -> f64 {
            (0..n)
                .map(|j| {
                    let t = u[2 * j];
                    let r = t / (1.0 - t);
                    TAU * r / ((1.0 - t) * (1.0 - t))
                })
                .product()
        };
        let periodic = (0..2 * n).map(|i| i % 2 == 1).collect();
        Self::new(format!("cp{n}"), 2 * n, Arc::new(map), Jacobian::Analytic(Arc::new(jac)), 1e-6)
            .with_periodic(periodic)
    }

    /// Unit polydisk `|z_j| ≤ 1` with `|z_j| = t`, `arg z_j = 2πs`.
    pub fn polydisk(n: usize) -> Self {
        let map = move |u: &[f64]| -> Vec<f64> {
            let mut x = Vec::with_capacity(2 * n);
            for j in 0..n {
                let th = TAU * u[2 * j + 1];
                x.push(u[2 * j] * th.cos());
                x.push(u[2 * j] * th.sin());
            }
            x
        };
        let jac = move |u: &[f64]| -> f64 { (0..n).map(|j| TAU * u[2 * j]).product() };
        let periodic = (0..2 * n).map(|i| i % 2 == 1).collect();
        Self::new(format!("polydisk{n}"), 2 * n, Arc::new(map), Jacobian::Analytic(Arc::new(jac)), 0.0)
            .with_periodic(periodic)
    }

    /// Identity on the unit cell of the square torus.
    pub fn torus(n: usize) -> Self {
        Self::new(
            format!("torus{n}"),
            2 * n,
            Arc::new(|u: &[f64]| u.to_vec()),
            Jacobian::Analytic(Arc::new(|_| 1.0)),
            0.0,
        )
        .with_periodic(vec![true; 2 * n])
    }

    /// Fundamental domain `1 ≤ |z| < 2` of `z ~ 2z`: `z = 2^ρ σ(angles)` with
    /// hyperspherical angles on `S^{2n−1}`. Jacobian by differences.
    pub fn hopf(n: usize) -> Self {
        let d = 2 * n;
        let map = move |u: &[f64]| -> Vec<f64> {
            let r = 2f64.powf(u[0]);
            let mut x = vec![0.0; d];
            let mut s = r;
            for (i, xi) in x.iter_mut().enumerate().take(d - 1) {
                let phi = if i + 1 == d - 1 { TAU * u[i + 1] } else { PI * u[i + 1] };
                *xi = s * phi.cos();
                s *= phi.sin();
            }
            x[d - 1] = s;
            x
        };
        let mut periodic = vec![false; d];
        periodic[0] = true;
        periodic[d - 1] = true;
        Self::new(format!("hopf{n}"), d, Arc::new(map), Jacobian::Fd { step: 1e-5 }, 0.0)
            .with_periodic(periodic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cp_jacobian_matches_differences() {
        let chart = ChartParam::cp(2);
        let fd = ChartParam::new("fd", 4, chart.map.clone(), Jacobian::Fd { step: 1e-6 }, 0.0);
        let u = [0.3, 0.7, 0.55, 0.1];
        let a = chart.jacobian(&u).unwrap();
        let b = fd.jacobian(&u).unwrap();
        assert!((a - b).abs() < 1e-7 * a, "{a} vs {b}");
    }

    #[test]
    fn polydisk_jacobian_matches_differences() {
        let chart = ChartParam::polydisk(2);
        let fd = ChartParam::new("fd", 4, chart.map.clone(), Jacobian::Fd { step: 1e-6 }, 0.0);
        let u = [0.3, 0.7, 0.55, 0.1];
        let a = chart.jacobian(&u).unwrap();
        assert!((a - fd.jacobian(&u).unwrap()).abs() < 1e-7 * a);
    }

    #[test]
    fn hopf_chart_radius_and_jacobian() {
        let chart = ChartParam::hopf(1);
        let x = chart.point(&[0.5, 0.25]);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
        // polar in 2D: dx dy = R dR dθ, R = 2^ρ, θ = 2πu → 2π R² ln 2
        let j = chart.jacobian(&[0.5, 0.25]).unwrap();
        assert!((j - TAU * 2.0 * 2f64.ln()).abs() < 1e-8, "{j}");
    }

    #[test]
    fn singular_margin_skips_only_nonperiodic_faces() {
        let chart = ChartParam::cp(1);
        assert!(chart.is_singular(&[1.0 - 1e-9, 0.5]));
        assert!(!chart.is_singular(&[0.5, 0.0]));
        assert!(!ChartParam::torus(1).is_singular(&[0.0, 1.0]));
    }
}
