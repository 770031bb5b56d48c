//! Built-in manifolds, metrics read from text, and the Hopf-surface checks.

pub mod dsl;
mod hopf;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{complex_coords, Domain, FdConfig};
use crate::characteristic::{self, DeformationPoint, DensityEngine, IndexFormula, Patch, TwistSpec};
use crate::error::{Error, Result};
use crate::exterior::PolyForm;
use crate::geometry::{CMatrix, ConformallyScaled, FnMetric, Geometry, HermitianMetricField, ScalarField};
use crate::quadrature::{ChartParam, IntegralResult, Rule};

pub use hopf::{
    dolbeault_laplacian0, form_norm, hopf_identification_residual, hopf_identities, HopfIdentities,
};

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 6] = ["cp1", "cp2", "torus2", "torus4", "hopf2", "hopf3"];

/// Residual below which `dω = 0` and `∂∂̄ω = 0` count as satisfied.
pub const FLAG_TOL: f64 = 1e-6;

/// Points per built-in at which the declared flags are measured.
const FLAG_POINTS: usize = 3;

/// Coordinate patch used to integrate over the manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChartKind {
    /// Affine chart of `CPⁿ` in polar coordinates.
    Cp,
    /// Shell `1 ≤ |z| < 2` of `Cⁿ∖{0}` modulo `z ~ 2z`.
    Hopf,
    /// Unit cell of the square torus.
    Torus,
}

impl ChartKind {
    pub fn name(self) -> &'static str {
        match self {
            ChartKind::Cp => "cp",
            ChartKind::Hopf => "hopf",
            ChartKind::Torus => "torus",
        }
    }

    pub fn chart(self, n: usize) -> ChartParam {
        match self {
            ChartKind::Cp => ChartParam::cp(n),
            ChartKind::Hopf => ChartParam::hopf(n),
            ChartKind::Torus => ChartParam::torus(n),
        }
    }

    pub fn domain(self) -> Domain {
        match self {
            ChartKind::Hopf => Domain::Punctured { min_radius: 0.5 },
            _ => Domain::Everywhere,
        }
    }

    /// Conformal factor `φ` of the default deformation `h → (1 + tφ) h`.
    /// Each is smooth on the compact manifold: decaying at infinity on `CPⁿ`,
    /// scale invariant on the Hopf manifold, periodic on the torus.
    pub fn deformation(self) -> ScalarField {
        match self {
            ChartKind::Cp => Arc::new(|x: &[f64]| 0.3 / (1.0 + x.iter().map(|v| v * v).sum::<f64>())),
            ChartKind::Hopf => Arc::new(|x: &[f64]| {
                0.3 * (x[0] * x[0] + x[1] * x[1]) / x.iter().map(|v| v * v).sum::<f64>()
            }),
            ChartKind::Torus => Arc::new(|x: &[f64]| 0.3 * (std::f64::consts::TAU * x[0]).cos()),
        }
    }
}

impl fmt::Display for ChartKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChartKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cp" => Ok(ChartKind::Cp),
            "hopf" => Ok(ChartKind::Hopf),
            "torus" => Ok(ChartKind::Torus),
            _ => Err(format!("unknown chart `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub kahler: bool,
    pub skt: bool,
}

/// Measured `max |dω|` and `max |∂∂̄ω|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlagResiduals {
    pub d_omega: f64,
    pub skt: f64,
}

impl FlagResiduals {
    pub fn flags(&self) -> Flags {
        Flags {
            kahler: self.d_omega < FLAG_TOL,
            skt: self.skt < FLAG_TOL,
        }
    }
}

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Point of the `Z_0 ≠ 0` chart of `CPⁿ` with coordinates `w` in the
/// `Z_i ≠ 0` chart (`i ≥ 1`): `z_i = 1/w_i`, `z_k = w_k/w_i`.
fn cp_transition(w: &[f64], i: usize) -> Vec<f64> {
    let w = complex_coords(w);
    let p = i - 1;
    let inv = w[p].inv();
    w.iter()
        .enumerate()
        .flat_map(|(k, wk)| {
            let z = if k == p { inv } else { wk * inv };
            [z.re, z.im]
        })
        .collect()
}

/// Metric of the `Z_i ≠ 0` chart pulled back from the `Z_0 ≠ 0` chart:
/// `h̃ = Jᵀ h J̄` with `J = ∂z/∂w`.
struct CpPatchMetric {
    base: Arc<dyn HermitianMetricField>,
    patch: usize,
}

impl HermitianMetricField for CpPatchMetric {
    fn complex_dim(&self) -> usize {
        self.base.complex_dim()
    }

    fn eval(&self, x: &[f64]) -> Result<CMatrix> {
        let n = self.complex_dim();
        let w = complex_coords(x);
        let p = self.patch - 1;
        let inv = w[p].inv();
        let mut j = CMatrix::zeros(n, n);
        for k in 0..n {
            if k == p {
                j[(p, p)] = -inv * inv;
            } else {
                j[(k, k)] = inv;
                j[(k, p)] = -w[k] * inv * inv;
            }
        }
        let h = self.base.eval(&cp_transition(x, self.patch))?;
        Ok(j.transpose() * h * j.map(|c| c.conj()))
    }
}

/// A compact complex manifold ready for integration.
#[derive(Clone)]
pub struct ManifoldSpec {
    pub name: String,
    pub n: usize,
    /// Metric in the primary chart, including any deformation.
    pub metric: Arc<dyn HermitianMetricField>,
    base: Arc<dyn HermitianMetricField>,
    pub chart: ChartKind,
    pub twist: TwistSpec,
    pub expected_index: Option<i64>,
    pub flags: Flags,
    /// The transition maps between the affine charts of `CPⁿ` are isometries
    /// of the metric, so every chart uses the same formula.
    pub invariant_patches: bool,
    /// Parameter `t` of the default deformation `(1 + tφ) h`.
    pub deformation: f64,
}

impl fmt::Debug for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldSpec")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("chart", &self.chart)
            .field("twist", &self.twist)
            .field("expected_index", &self.expected_index)
            .field("flags", &self.flags)
            .finish()
    }
}

impl ManifoldSpec {
    fn new(
        name: String,
        n: usize,
        metric: Arc<dyn HermitianMetricField>,
        chart: ChartKind,
        twist: TwistSpec,
        expected_index: Option<i64>,
    ) -> Self {
        Self {
            name,
            n,
            metric: metric.clone(),
            base: metric,
            chart,
            twist,
            expected_index,
            flags: Flags {
                kahler: false,
                skt: false,
            },
            invariant_patches: false,
            deformation: 0.0,
        }
    }

    /// Parameterization of the primary chart (used for sampling points).
    pub fn chart_param(&self) -> ChartParam {
        self.chart.chart(self.n)
    }

    /// Metric of patch `i`; patch 0 is the primary chart.
    fn patch_metric(&self, i: usize) -> Arc<dyn HermitianMetricField> {
        let base: Arc<dyn HermitianMetricField> = if i == 0 || self.invariant_patches {
            self.base.clone()
        } else {
            Arc::new(CpPatchMetric {
                base: self.base.clone(),
                patch: i,
            })
        };
        if self.deformation == 0.0 {
            return base;
        }
        let phi = self.chart.deformation();
        let factor: Arc<ScalarFn> = if i == 0 {
            phi
        } else {
            Arc::new(move |w: &[f64]| phi(&cp_transition(w, i)))
        };
        Arc::new(ConformallyScaled::new(base, factor, self.deformation))
    }

    /// Coordinate patches covering the manifold up to a null set. `CPⁿ` uses
    /// its `n + 1` affine charts, each over the unit polydisk where `|Z_i|` is
    /// the largest homogeneous coordinate, so that no evaluation point lies far
    /// out in a chart. The twist generator is invariant under the transitions.
    pub fn patches(&self, cfg: FdConfig) -> Vec<Patch> {
        let count = match self.chart {
            ChartKind::Cp => self.n + 1,
            _ => 1,
        };
        (0..count)
            .map(|i| Patch {
                engine: DensityEngine::new(Geometry::new(self.patch_metric(i), cfg), self.twist.clone()),
                chart: match self.chart {
                    ChartKind::Cp => ChartParam::polydisk(self.n),
                    _ => self.chart_param(),
                },
            })
            .collect()
    }

    pub fn integrate_index(
        &self,
        formulas: &[IndexFormula],
        cfg: FdConfig,
        rule: &Rule,
    ) -> Result<Vec<IntegralResult>> {
        characteristic::integrate_index(&self.patches(cfg), formulas, rule)
    }

    /// Index of `formula` along the default deformation at the parameters `ts`.
    pub fn deformation_probe(
        &self,
        formula: IndexFormula,
        cfg: FdConfig,
        rule: &Rule,
        ts: &[f64],
    ) -> Result<Vec<DeformationPoint>> {
        characteristic::deformation_probe(
            |t| Ok(self.with_deformation(t).patches(cfg)),
            formula,
            rule,
            ts,
        )
    }

    fn with_deformation(&self, t: f64) -> Self {
        let mut out = self.clone();
        out.deformation = t;
        out.metric = out.patch_metric(0);
        out
    }

    pub fn geometry(&self, cfg: FdConfig) -> Geometry {
        Geometry::new(self.metric.clone(), cfg)
    }

    pub fn engine(&self, cfg: FdConfig) -> DensityEngine {
        DensityEngine::new(self.geometry(cfg), self.twist.clone())
    }

    /// Chart points drawn from the interior of the parameter cube: uniform
    /// along periodic directions, within `[0.05, 0.8]` along the others.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let chart = self.chart_param();
        let periodic = chart.periodic();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let u: Vec<f64> = periodic
                    .iter()
                    .map(|&p| {
                        if p {
                            rng.random_range(0.0..1.0)
                        } else {
                            rng.random_range(0.05..0.8)
                        }
                    })
                    .collect();
                chart.point(&u)
            })
            .collect()
    }

    pub fn measure_flags(&self, points: &[Vec<f64>], cfg: FdConfig) -> Result<FlagResiduals> {
        let g = self.geometry(cfg);
        let mut r = FlagResiduals {
            d_omega: 0.0,
            skt: 0.0,
        };
        for p in points {
            r.d_omega = r.d_omega.max(g.d_kahler_form(p)?.max_abs());
            r.skt = r.skt.max(g.skt_residual(p)?);
        }
        Ok(r)
    }

    /// The same manifold with metric `(1 + tφ) h`, `φ` the chart's default
    /// deformation. Flags are re-measured.
    pub fn deformed(&self, t: f64) -> Result<Self> {
        let mut out = self.with_deformation(t);
        out.flags = out.measure_flags(&out.sample_points(FLAG_POINTS, 1), FdConfig::default())?.flags();
        Ok(out)
    }

    /// Manifold from a parsed metric file. Flags are measured.
    pub fn from_metric_file(file: &dsl::MetricFile, metric: dsl::DslMetric) -> Result<Self> {
        let twist = match file.twist {
            Some(k) => fs_unit_twist().with_charge(k),
            None => TwistSpec::none(),
        };
        let mut spec = Self::new(
            file.name.clone().unwrap_or_else(|| "metric-file".into()),
            file.n,
            Arc::new(metric),
            file.chart,
            twist,
            file.expected_index,
        );
        spec.flags = spec
            .measure_flags(&spec.sample_points(FLAG_POINTS, 1), FdConfig::default())?
            .flags();
        Ok(spec)
    }

    /// Parse and validate metric text, then build the manifold.
    pub fn from_text(text: &str) -> Result<Self> {
        let (file, metric) = dsl::parse_metric(text)?;
        Self::from_metric_file(&file, metric)
    }
}

/// Fubini–Study metric `h = δ/(1+|z|²) − z̄_j z_k/(1+|z|²)²`. The same
/// formula holds in every affine chart of `CPⁿ`.
pub fn fubini_study(n: usize) -> FnMetric {
    FnMetric::new(n, Domain::Everywhere, move |x| {
        let z = complex_coords(x);
        let s = 1.0 + z.iter().map(|v| v.norm_sqr()).sum::<f64>();
        CMatrix::from_fn(n, n, |j, k| {
            let delta = if j == k { 1.0 / s } else { 0.0 };
            Complex64::new(delta, 0.0) - z[j].conj() * z[k] / (s * s)
        })
    })
}

/// `h = δ` (the flat torus in its unit cell).
pub fn flat(n: usize) -> FnMetric {
    FnMetric::new(n, Domain::Everywhere, move |_| CMatrix::identity(n, n))
}

/// `h_{jk̄} = δ_{jk}/(z̄z)`.
pub fn hopf_metric(n: usize) -> FnMetric {
    FnMetric::new(n, ChartKind::Hopf.domain(), move |x| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        CMatrix::identity(n, n) * Complex64::new(1.0 / r2, 0.0)
    })
}

/// Twist of `O(k)` on `CP¹`: curvature 2-form of `O(1)` with the orientation
/// used for index densities, `−2 dx∧dy/(1+|z|²)²`.
pub fn fs_unit_twist() -> TwistSpec {
    TwistSpec::new(
        1,
        Arc::new(|x: &[f64]| {
            let r2 = x[0] * x[0] + x[1] * x[1];
            PolyForm::monomial(2, &[0, 1], Complex64::new(-2.0 / ((1.0 + r2) * (1.0 + r2)), 0.0))
        }),
    )
}

/// Built-in manifold. `twist` is the charge `k` of `O(k)`, only for `cp1`.
pub fn builtin(name: &str, twist: Option<i64>) -> Result<ManifoldSpec> {
    let (n, chart, metric, expected, flags): (usize, ChartKind, Arc<dyn HermitianMetricField>, i64, Flags) =
        match name {
            "cp1" => (1, ChartKind::Cp, Arc::new(fubini_study(1)), 1, Flags { kahler: true, skt: true }),
            "cp2" => (2, ChartKind::Cp, Arc::new(fubini_study(2)), 1, Flags { kahler: true, skt: true }),
            "torus2" => (1, ChartKind::Torus, Arc::new(flat(1)), 0, Flags { kahler: true, skt: true }),
            "torus4" => (2, ChartKind::Torus, Arc::new(flat(2)), 0, Flags { kahler: true, skt: true }),
            "hopf2" => (2, ChartKind::Hopf, Arc::new(hopf_metric(2)), 0, Flags { kahler: false, skt: true }),
            "hopf3" => (3, ChartKind::Hopf, Arc::new(hopf_metric(3)), 0, Flags { kahler: false, skt: false }),
            _ => return Err(Error::UnknownManifold(name.to_string())),
        };
    let (twist_spec, expected) = match (name, twist) {
        ("cp1", Some(k)) => (fs_unit_twist().with_charge(k), k + 1),
        ("cp1", None) => (fs_unit_twist().with_charge(0), expected),
        (_, Some(0)) | (_, None) => (TwistSpec::none(), expected),
        (_, Some(k)) => {
            return Err(Error::UnsupportedParam {
                manifold: name.to_string(),
                detail: format!("twist charge {k} (only cp1 carries a twist)"),
            })
        }
    };
    let mut spec = ManifoldSpec::new(name.to_string(), n, metric, chart, twist_spec, Some(expected));
    spec.flags = flags;
    spec.invariant_patches = chart == ChartKind::Cp;
    let measured = spec
        .measure_flags(&spec.sample_points(FLAG_POINTS, 1), FdConfig::default())?;
    if measured.flags() != flags {
        return Err(Error::FlagMismatch {
            manifold: name.to_string(),
            d_omega: measured.d_omega,
            skt: measured.skt,
        });
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load_with_their_flags() {
        for name in BUILTINS {
            let spec = builtin(name, None).unwrap();
            assert_eq!(spec.n * 2, spec.chart_param().dim(), "{name}");
        }
        let h2 = builtin("hopf2", None).unwrap();
        assert_eq!(h2.flags, Flags { kahler: false, skt: true });
        assert_eq!(h2.expected_index, Some(0));
        let h3 = builtin("hopf3", None).unwrap();
        assert_eq!(h3.flags, Flags { kahler: false, skt: false });
    }

    #[test]
    fn twist_only_on_cp1() {
        assert_eq!(builtin("cp1", Some(3)).unwrap().expected_index, Some(4));
        assert_eq!(builtin("cp1", Some(-1)).unwrap().expected_index, Some(0));
        assert!(matches!(builtin("hopf2", Some(1)), Err(Error::UnsupportedParam { .. })));
        assert!(matches!(builtin("k3", None), Err(Error::UnknownManifold(_))));
    }

    #[test]
    fn sample_points_are_reproducible_and_inside_domain() {
        let spec = builtin("hopf2", None).unwrap();
        let a = spec.sample_points(20, 7);
        assert_eq!(a, spec.sample_points(20, 7));
        for p in &a {
            let r: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((1.0..2.0).contains(&r), "{r}");
        }
    }

    #[test]
    fn deformed_metric_scales_pointwise() {
        let spec = builtin("cp1", None).unwrap();
        let d = spec.deformed(0.5).unwrap();
        let x = [0.4, -0.2];
        let a = spec.metric.eval(&x).unwrap()[(0, 0)].re;
        let b = d.metric.eval(&x).unwrap()[(0, 0)].re;
        assert!((b / a - (1.0 + 0.5 * 0.3 / 1.2)).abs() < 1e-14);
    }
}
