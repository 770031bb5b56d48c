//! Characteristic classes and the four index densities.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::calculus::d;
use crate::error::{Error, Result};
use crate::exterior::{exp_even, trlog_apply, MatrixPolyForm, PolyForm, ScalarSeries};
use crate::geometry::{ConnectionChoice, Curvature, Geometry};
use crate::quadrature::{integrate, ChartParam, IntegralResult, Rule};

/// Mixed curvature above this makes the holomorphic block meaningless.
pub const MIXED_CURVATURE_TOL: f64 = 1e-4;

/// Kähler (`dω`) and SKT (`∂∂̄ω`) precondition tolerance.
pub const PRECONDITION_TOL: f64 = 1e-6;

/// Sign turning top components in the coordinate orientation
/// `dx¹∧dy¹∧…∧dxⁿ∧dyⁿ` into index contributions.
///
/// Curvature 2-forms here are the negatives of the Chern–Weil normalization
/// in which the hyperplane class of `CPⁿ` integrates to +1, so the degree-`2k`
/// part of every class carries `(−1)^k` and the top part `(−1)^n`.
pub fn orientation_sign(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexFormula {
    /// `e^{(F′+F₀)/2π} Â(ℛ_LC)`, valid on Kähler manifolds.
    KahlerAS,
    /// `e^{(F′+F₀)/2π} Â(ℛ̂)` with the Bismut curvature, valid on SKT manifolds.
    BismutSKT,
    /// `e^{F′/2π} exp{(1/16π) I_M^P ∂_N∂_P ln det g dx^M∧dx^N} Â(ℛ_LC)`.
    UnwoundSmilga,
    /// `e^{F′/2π} Td(ℛ̂_hol)`.
    ToddHRR,
}

impl IndexFormula {
    pub const ALL: [IndexFormula; 4] = [
        IndexFormula::KahlerAS,
        IndexFormula::BismutSKT,
        IndexFormula::UnwoundSmilga,
        IndexFormula::ToddHRR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndexFormula::KahlerAS => "kahler",
            IndexFormula::BismutSKT => "bismut",
            IndexFormula::UnwoundSmilga => "unwound",
            IndexFormula::ToddHRR => "todd",
        }
    }
}

impl fmt::Display for IndexFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexFormula {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "kahler" | "kahleras" | "as" => Ok(IndexFormula::KahlerAS),
            "bismut" | "bismutskt" | "skt" => Ok(IndexFormula::BismutSKT),
            "unwound" | "smilga" | "unwoundsmilga" => Ok(IndexFormula::UnwoundSmilga),
            "todd" | "toddhrr" | "hrr" => Ok(IndexFormula::ToddHRR),
            other => Err(format!(
                "unknown formula `{other}` (expected kahler, bismut, unwound or todd)"
            )),
        }
    }
}

type FormFn = dyn Fn(&[f64]) -> PolyForm + Send + Sync;

/// Twist gauge field `F′ = k · F_unit` with `∫ F_unit/2π = 1`.
#[derive(Clone)]
pub struct TwistSpec {
    pub charge: i64,
    unit: Option<Arc<FormFn>>,
}

impl fmt::Debug for TwistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwistSpec")
            .field("charge", &self.charge)
            .field("generator", &self.unit.is_some())
            .finish()
    }
}

impl TwistSpec {
    pub fn none() -> Self {
        Self {
            charge: 0,
            unit: None,
        }
    }

    pub fn new(charge: i64, unit: Arc<FormFn>) -> Self {
        Self {
            charge,
            unit: Some(unit),
        }
    }

    pub fn with_charge(&self, charge: i64) -> Self {
        Self {
            charge,
            unit: self.unit.clone(),
        }
    }

    pub fn has_generator(&self) -> bool {
        self.unit.is_some()
    }

    /// `F′` at `x`.
    pub fn field(&self, x: &[f64]) -> PolyForm {
        match (&self.unit, self.charge) {
            (Some(u), k) if k != 0 => u(x).scale_real(k as f64),
            _ => PolyForm::zero(x.len()),
        }
    }

    /// `max |dF_unit|` at `x`.
    pub fn closure_residual(&self, geometry: &Geometry, x: &[f64]) -> Result<f64> {
        match &self.unit {
            None => Ok(0.0),
            Some(u) => Ok(d(&|y: &[f64]| Ok(u(y)), x, geometry.fd(), &geometry.domain())?.max_abs()),
        }
    }
}

/// `det^{-1/2}[sin(R/4π)/(R/4π)] = exp(−½ tr log s(R/4π))`, `s(x) = sin x / x`.
pub fn aroof_factor(r: &MatrixPolyForm) -> Result<PolyForm> {
    let n = r.dim() / 2;
    let log_s = ScalarSeries::sin_over_x(n).log()?;
    let half: Vec<f64> = log_s.coeffs().iter().map(|c| -0.5 * c).collect();
    let series = ScalarSeries::new(half).exp()?;
    trlog_apply(&r.scale(Complex64::new(1.0 / (4.0 * PI), 0.0)), &series)
}

/// `Td = det[M/(1 − e^{−M})]` with `M = i ℛ_hol/2π`.
pub fn todd_class(rhol: &MatrixPolyForm) -> Result<PolyForm> {
    let n = rhol.dim() / 2;
    let m = rhol.scale(Complex64::new(0.0, 1.0 / (2.0 * PI)));
    trlog_apply(&m, &ScalarSeries::todd(n))
}

/// Todd class of a curvature, refusing connections with mixed blocks.
pub fn todd_from_curvature(curv: &Curvature) -> Result<PolyForm> {
    let mixed = curv.mixed_magnitude();
    if mixed > MIXED_CURVATURE_TOL {
        return Err(Error::MixedCurvature { residual: mixed });
    }
    todd_class(&curv.holomorphic_block())
}

/// Pointwise evaluation of index densities for one metric and twist.
#[derive(Clone, Debug)]
pub struct DensityEngine {
    pub geometry: Geometry,
    pub twist: TwistSpec,
    /// Connection whose holomorphic block enters the Todd class.
    pub todd_connection: ConnectionChoice,
}

impl DensityEngine {
    pub fn new(geometry: Geometry, twist: TwistSpec) -> Self {
        Self {
            geometry,
            twist,
            todd_connection: ConnectionChoice::Bismut,
        }
    }

    pub fn with_todd_connection(mut self, choice: ConnectionChoice) -> Self {
        self.todd_connection = choice;
        self
    }

    /// Densities for `formulas` at `x`, sharing curvature evaluations.
    pub fn densities(&self, formulas: &[IndexFormula], x: &[f64]) -> Result<Vec<PolyForm>> {
        let g = &self.geometry.with_memo();
        let mut needed: Vec<ConnectionChoice> = Vec::new();
        let mut need = |c: ConnectionChoice| {
            if !needed.contains(&c) {
                needed.push(c);
            }
        };
        for f in formulas {
            match f {
                IndexFormula::KahlerAS | IndexFormula::UnwoundSmilga => {
                    need(ConnectionChoice::LeviCivita)
                }
                IndexFormula::BismutSKT => need(ConnectionChoice::Bismut),
                IndexFormula::ToddHRR => need(self.todd_connection),
            }
        }
        let curvatures = g.curvatures(&needed, x)?;
        let curv = |c: ConnectionChoice| &curvatures[needed.iter().position(|&k| k == c).unwrap()];
        let twist = self.twist.field(x);
        let two_pi = 2.0 * PI;
        let f0 = if formulas
            .iter()
            .any(|f| matches!(f, IndexFormula::KahlerAS | IndexFormula::BismutSKT))
        {
            Some(g.det_bundle(x)?.1)
        } else {
            None
        };
        let gauge_factor = |with_f0: bool| -> Result<PolyForm> {
            let mut f = twist.clone();
            if with_f0 {
                f += f0.as_ref().expect("F0 computed");
            }
            exp_even(&f.scale_real(1.0 / two_pi))
        };
        formulas
            .iter()
            .map(|f| {
                let out = match f {
                    IndexFormula::KahlerAS => gauge_factor(true)?
                        .wedge(&aroof_factor(&curv(ConnectionChoice::LeviCivita).real_matrix())?)?,
                    IndexFormula::BismutSKT => gauge_factor(true)?
                        .wedge(&aroof_factor(&curv(ConnectionChoice::Bismut).real_matrix())?)?,
                    IndexFormula::UnwoundSmilga => {
                        let e = exp_even(&g.unwound_exponent(x)?)?;
                        gauge_factor(false)?.wedge(&e)?.wedge(&aroof_factor(
                            &curv(ConnectionChoice::LeviCivita).real_matrix(),
                        )?)?
                    }
                    IndexFormula::ToddHRR => {
                        gauge_factor(false)?.wedge(&todd_from_curvature(curv(self.todd_connection))?)?
                    }
                };
                Ok(out)
            })
            .collect()
    }

    pub fn density(&self, formula: IndexFormula, x: &[f64]) -> Result<PolyForm> {
        Ok(self.densities(&[formula], x)?.remove(0))
    }

    /// Index contributions `(−1)ⁿ Re top(density)` at `x`.
    pub fn index_tops(&self, formulas: &[IndexFormula], x: &[f64]) -> Result<Vec<f64>> {
        let sign = orientation_sign(self.geometry.complex_dim());
        let ds = self.densities(formulas, x)?;
        ds.iter()
            .map(|f| {
                let v = sign * f.top_component().re;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite { point: x.to_vec() })
                }
            })
            .collect()
    }

    /// Measured residual of the formula's validity condition, maximized over
    /// `points`, or `None` if the formula is unconditional.
    pub fn precondition_residual(
        &self,
        formula: IndexFormula,
        points: &[Vec<f64>],
    ) -> Result<Option<(&'static str, f64)>> {
        let g = &self.geometry;
        let mut worst: f64 = 0.0;
        let condition = match formula {
            IndexFormula::KahlerAS => {
                for p in points {
                    worst = worst.max(g.d_kahler_form(p)?.max_abs());
                }
                "dω = 0"
            }
            IndexFormula::BismutSKT => {
                for p in points {
                    worst = worst.max(g.skt_residual(p)?);
                }
                "∂∂̄ω = 0"
            }
            _ => return Ok(None),
        };
        Ok(Some((condition, worst)))
    }

    /// Error if the formula's validity condition fails at any of `points`.
    pub fn check_precondition(&self, formula: IndexFormula, points: &[Vec<f64>]) -> Result<()> {
        if let Some((condition, residual)) = self.precondition_residual(formula, points)? {
            if residual > PRECONDITION_TOL {
                return Err(Error::Precondition {
                    formula: formula.name().to_string(),
                    condition: condition.to_string(),
                    residual,
                    tolerance: PRECONDITION_TOL,
                });
            }
        }
        Ok(())
    }
}

/// One coordinate patch of a manifold: the densities in its coordinates
/// and a parameterization of the region it covers.
#[derive(Clone, Debug)]
pub struct Patch {
    pub engine: DensityEngine,
    pub chart: ChartParam,
}

/// Integrals of `index_tops` summed over `patches`, one result per formula.
/// Error estimates and traces add across patches.
pub fn integrate_index(
    patches: &[Patch],
    formulas: &[IndexFormula],
    rule: &Rule,
) -> Result<Vec<IntegralResult>> {
    let mut total: Option<Vec<IntegralResult>> = None;
    for p in patches {
        let f = |x: &[f64]| p.engine.index_tops(formulas, x);
        let res = integrate(&f, formulas.len(), &p.chart, rule)?;
        total = Some(match total {
            None => res,
            Some(acc) => acc.into_iter().zip(res).map(|(a, r)| a.combined(&r)).collect(),
        });
    }
    total.ok_or_else(|| Error::InvalidQuadrature("no patches to integrate over".into()))
}

/// Parameter values of the default deformation grid.
pub const DEFORMATION_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

#[derive(Clone, Debug)]
pub struct DeformationPoint {
    pub t: f64,
    pub result: IntegralResult,
}

/// Index of `formula` along a one-parameter family of metrics; `patches_at(t)`
/// gives the patches of the metric at `t`.
pub fn deformation_probe<F>(
    patches_at: F,
    formula: IndexFormula,
    rule: &Rule,
    ts: &[f64],
) -> Result<Vec<DeformationPoint>>
where
    F: Fn(f64) -> Result<Vec<Patch>>,
{
    ts.iter()
        .map(|&t| {
            let result = integrate_index(&patches_at(t)?, &[formula], rule)?.remove(0);
            Ok(DeformationPoint { t, result })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn aroof_of_zero_is_one() {
        let r = MatrixPolyForm::zero(4, 4);
        assert_eq!(aroof_factor(&r).unwrap(), PolyForm::one(4));
    }

    #[test]
    fn aroof_degree_four_is_trace_square_over_twelve() {
        // log(sin x/x) = −x²/6 − …, so Â = 1 + tr(G²)/12 + … with G = R/4π.
        let mut r = MatrixPolyForm::zero(2, 4);
        let a = PolyForm::monomial(4, &[0, 1], c(1.3));
        let mut b = PolyForm::monomial(4, &[2, 3], c(0.7));
        b.add_monomial(&[0, 2], c(-0.4));
        *r.entry_mut(0, 1) = a.clone();
        *r.entry_mut(1, 0) = a.scale_real(-1.0);
        *r.entry_mut(0, 0) = b.clone();
        let g = r.scale(c(1.0 / (4.0 * PI)));
        let tr2 = g.wedge(&g).unwrap().trace();
        let expect = &PolyForm::one(4) + &tr2.scale_real(1.0 / 12.0);
        let got = aroof_factor(&r).unwrap();
        assert!(got.max_diff(&expect) < 1e-15, "{got:?} vs {expect:?}");
    }

    #[test]
    fn aroof_of_rotation_block_is_y_over_sinh_y() {
        // [[0, λθ], [−λθ, 0]] has eigenvalues ±iλθ, so Â = y/sinh y = 1 − y²/6
        // with y = λθ/4π.
        let l = 2.0;
        let th = &PolyForm::monomial(4, &[0, 1], c(1.0)) + &PolyForm::monomial(4, &[2, 3], c(1.0));
        let mut r = MatrixPolyForm::zero(2, 4);
        *r.entry_mut(0, 1) = th.scale_real(l);
        *r.entry_mut(1, 0) = th.scale_real(-l);
        let got = aroof_factor(&r).unwrap();
        let u = l / (4.0 * PI);
        // θ∧θ = 2 dx⁰∧dx¹∧dx²∧dx³
        let expect_top = -(u * u) / 6.0 * 2.0;
        assert!((got.top_component().re - expect_top).abs() < 1e-15);
        assert!(got.degree_part(2).max_abs() < 1e-15);
    }

    #[test]
    fn todd_degree_two_is_half_first_chern() {
        let a = PolyForm::monomial(2, &[0, 1], c(0.9));
        let m = MatrixPolyForm::from_entries(1, vec![a.clone()]).unwrap();
        let td = todd_class(&m).unwrap();
        let c1 = a.scale(Complex64::new(0.0, 1.0 / (2.0 * PI)));
        assert!(td.degree_part(2).max_diff(&c1.scale_real(0.5)) < 1e-15);
        assert_eq!(todd_class(&MatrixPolyForm::zero(1, 2)).unwrap(), PolyForm::one(2));
    }

    #[test]
    fn formula_names_roundtrip() {
        for f in IndexFormula::ALL {
            assert_eq!(f.name().parse::<IndexFormula>().unwrap(), f);
        }
        assert!("bogus".parse::<IndexFormula>().is_err());
    }
}
