//! Connections, torsion, frames and curvature of a Hermitian metric field.
//!
//! Real coordinates are ordered `(Re z¹, Im z¹, …)`. Tensors are flat
//! row-major vectors over the real dimension `d = 2n`:
//!
//! * connection coefficients `γ^P_{MN}` at `[(p*d + m)*d + n]`, with `M` the
//!   differentiation slot (`∇_M V^P = ∂_M V^P + γ^P_{MK} V^K`);
//! * contorsion `C_{QMN}` at `[(q*d + m)*d + n]`;
//! * spin connection `Ω_{M}{}^A{}_B` at `[(m*d + a)*d + b]`;
//! * curvature `R_{KM}{}^A{}_B` at `[((k*d + m)*d + a)*d + b]`.

mod checks;
mod connection;
mod forms;
mod frame;
mod metric;

use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;

use crate::calculus::{Domain, FdConfig};
use crate::error::Result;

pub use checks::PairSymmetry;
pub use connection::{ConnectionChoice, FirstOrder};
pub use frame::{Curvature, Frame};
pub use metric::{
    assemble_real, checked_metric, cholesky, complex_structure, real_metric, realify, CMatrix,
    ConformallyScaled, FnMetric, HermitianMetricField, RealStructure, ScalarField, HERMITIAN_TOL,
};

/// Unitary `n × n` rotation applied to the holomorphic vielbein at each point.
pub type FrameGauge = Arc<dyn Fn(&[f64]) -> CMatrix + Send + Sync>;

/// Pointwise data keyed by the bit patterns of the coordinates.
#[derive(Default)]
struct Memo {
    h: Mutex<FxHashMap<Vec<u64>, CMatrix>>,
    flat: Mutex<FxHashMap<Vec<u64>, Vec<f64>>>,
}

fn memo_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// A metric field together with the difference scheme used on it.
#[derive(Clone)]
pub struct Geometry {
    metric: Arc<dyn HermitianMetricField>,
    cfg: FdConfig,
    gauge: Option<FrameGauge>,
    memo: Option<Arc<Memo>>,
}

impl std::fmt::Debug for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Geometry")
            .field("n", &self.metric.complex_dim())
            .field("cfg", &self.cfg)
            .field("gauge", &self.gauge.is_some())
            .field("memo", &self.memo.is_some())
            .finish()
    }
}

impl Geometry {
    pub fn new(metric: Arc<dyn HermitianMetricField>, cfg: FdConfig) -> Self {
        Self {
            metric,
            cfg,
            gauge: None,
            memo: None,
        }
    }

    /// Copy sharing a fresh cache of pointwise metric data. Nested stencils
    /// around one point revisit the same coordinates many times; a memoized
    /// copy evaluates each of them once. Intended to be short-lived.
    pub fn with_memo(&self) -> Self {
        Self {
            memo: Some(Arc::default()),
            ..self.clone()
        }
    }

    /// Validated `h_{jk̄}` at `x`.
    pub fn metric_at(&self, x: &[f64]) -> Result<CMatrix> {
        let Some(memo) = &self.memo else {
            return checked_metric(self.metric.as_ref(), x);
        };
        let key = memo_key(x);
        if let Some(h) = memo.h.lock().expect("memo lock").get(&key) {
            return Ok(h.clone());
        }
        let h = checked_metric(self.metric.as_ref(), x)?;
        memo.h.lock().expect("memo lock").insert(key, h.clone());
        Ok(h)
    }

    pub(crate) fn memoized_flat(
        &self,
        x: &[f64],
        compute: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Vec<f64>> {
        let Some(memo) = &self.memo else {
            return compute();
        };
        let key = memo_key(x);
        if let Some(v) = memo.flat.lock().expect("memo lock").get(&key) {
            return Ok(v.clone());
        }
        let v = compute()?;
        memo.flat.lock().expect("memo lock").insert(key, v.clone());
        Ok(v)
    }

    pub fn with_gauge(mut self, gauge: FrameGauge) -> Self {
        self.gauge = Some(gauge);
        self
    }

    pub fn with_fd(&self, cfg: FdConfig) -> Self {
        Self {
            cfg,
            ..self.clone()
        }
    }

    pub fn metric(&self) -> &Arc<dyn HermitianMetricField> {
        &self.metric
    }

    pub fn fd(&self) -> &FdConfig {
        &self.cfg
    }

    pub fn complex_dim(&self) -> usize {
        self.metric.complex_dim()
    }

    pub fn dim(&self) -> usize {
        2 * self.metric.complex_dim()
    }

    pub fn domain(&self) -> Domain {
        self.metric.domain()
    }
}
