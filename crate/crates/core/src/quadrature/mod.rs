//! Integration of top-degree densities over chart parameterizations.

mod chart;
pub mod sobol;

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use gauss_quad::legendre::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub use chart::{ChartParam, Jacobian};
use sobol::Sobol;

/// Points evaluated per parallel work item.
const CHUNK: u64 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    GaussTensor,
    QmcSobol,
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::GaussTensor => "gauss",
            Method::QmcSobol => "qmc",
            Method::MonteCarlo => "mc",
        }
    }

    /// Gauss for real dimension ≤ 4, randomized QMC above.
    pub fn default_for(dim: usize) -> Self {
        if dim <= 4 {
            Method::GaussTensor
        } else {
            Method::QmcSobol
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gauss" | "gauss_tensor" | "gauss-tensor" => Ok(Method::GaussTensor),
            "qmc" | "sobol" | "qmc_sobol" | "qmc-sobol" => Ok(Method::QmcSobol),
            "mc" | "monte-carlo" | "montecarlo" => Ok(Method::MonteCarlo),
            other => Err(Error::InvalidQuadrature(format!(
                "unknown method `{other}` (expected gauss, qmc or mc)"
            ))),
        }
    }
}

/// A concrete quadrature rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rule {
    /// Tensor Gauss–Legendre with `nodes` per axis; the error estimate is the
    /// difference to the rule with `nodes/2` per axis.
    Gauss { nodes: usize },
    /// `replicates` independent random digital shifts of `points` Sobol points.
    Sobol {
        points: u64,
        replicates: u32,
        seed: u64,
    },
    MonteCarlo { points: u64, seed: u64 },
}

pub const DEFAULT_REPLICATES: u32 = 8;

impl Rule {
    pub fn method(&self) -> Method {
        match self {
            Rule::Gauss { .. } => Method::GaussTensor,
            Rule::Sobol { .. } => Method::QmcSobol,
            Rule::MonteCarlo { .. } => Method::MonteCarlo,
        }
    }

    /// Largest rule of `method` using at most `budget` density evaluations
    /// (for Gauss the finer grid alone).
    pub fn from_budget(method: Method, budget: u64, dim: usize, seed: u64) -> Result<Self> {
        let rule = match method {
            Method::GaussTensor => {
                let mut nodes = (budget as f64).powf(1.0 / dim as f64).floor() as usize;
                while (nodes as u64 + 1).checked_pow(dim as u32).is_some_and(|v| v <= budget) {
                    nodes += 1;
                }
                while nodes > 1 && (nodes as u64).pow(dim as u32) > budget {
                    nodes -= 1;
                }
                Rule::Gauss { nodes }
            }
            Method::QmcSobol => Rule::Sobol {
                points: budget / DEFAULT_REPLICATES as u64,
                replicates: DEFAULT_REPLICATES,
                seed,
            },
            Method::MonteCarlo => Rule::MonteCarlo {
                points: budget,
                seed,
            },
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidQuadrature(m.to_string()));
        match *self {
            Rule::Gauss { nodes } if nodes < 2 => bad("Gauss rule needs at least 2 nodes per axis"),
            Rule::Sobol { replicates, .. } if replicates < 2 => {
                bad("randomized QMC needs at least 2 replicates")
            }
            Rule::Sobol { points: 0, .. } => bad("empty Sobol rule"),
            Rule::MonteCarlo { points, .. } if points < 2 => bad("Monte Carlo needs at least 2 points"),
            _ => Ok(()),
        }
    }

    /// The same rule with roughly twice the evaluations.
    pub fn refined(&self, dim: usize) -> Self {
        match *self {
            Rule::Gauss { nodes } => {
                let grow = 2f64.powf(1.0 / dim as f64);
                Rule::Gauss {
                    nodes: ((nodes as f64 * grow).ceil() as usize).max(nodes + 1),
                }
            }
            Rule::Sobol {
                points,
                replicates,
                seed,
            } => Rule::Sobol {
                points: 2 * points,
                replicates,
                seed,
            },
            Rule::MonteCarlo { points, seed } => Rule::MonteCarlo {
                points: 2 * points,
                seed,
            },
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match *self {
            Rule::Gauss { .. } => None,
            Rule::Sobol { seed, .. } | Rule::MonteCarlo { seed, .. } => Some(seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TracePoint {
    pub evaluations: u64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    /// Quadrature-error estimate (Gauss) or confidence half-width (MC/QMC).
    pub error: f64,
    pub evaluations: u64,
    /// Partial results in increasing evaluation count.
    pub trace: Vec<TracePoint>,
    pub seed: Option<u64>,
    pub method: Method,
}

impl IntegralResult {
    /// Result for the union of two disjoint regions integrated with the same
    /// rule. Error estimates add.
    pub fn combined(&self, other: &IntegralResult) -> IntegralResult {
        IntegralResult {
            value: self.value + other.value,
            error: self.error + other.error,
            evaluations: self.evaluations + other.evaluations,
            trace: self
                .trace
                .iter()
                .zip(&other.trace)
                .map(|(a, b)| TracePoint {
                    evaluations: a.evaluations + b.evaluations,
                    value: a.value + b.value,
                })
                .collect(),
            seed: self.seed,
            method: self.method,
        }
    }
}

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Per-output compensated sums of values and squared values.
#[derive(Clone, Debug)]
struct Moments {
    count: u64,
    sum: Vec<CompensatedSum>,
    sumsq: Vec<CompensatedSum>,
}

impl Moments {
    fn new(outputs: usize) -> Self {
        Self {
            count: 0,
            sum: vec![CompensatedSum::default(); outputs],
            sumsq: vec![CompensatedSum::default(); outputs],
        }
    }

    fn add(&mut self, v: &[f64]) {
        self.count += 1;
        for (k, &x) in v.iter().enumerate() {
            self.sum[k].add(x);
            self.sumsq[k].add(x * x);
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        for k in 0..self.sum.len() {
            self.sum[k].merge(&other.sum[k]);
            self.sumsq[k].merge(&other.sumsq[k]);
        }
    }

    fn sums(&self) -> Vec<f64> {
        self.sum.iter().map(CompensatedSum::value).collect()
    }
}

/// `f(φ(u))·|det Dφ(u)|`, zero on the singular margin.
fn pulled_back<F>(f: &F, outputs: usize, chart: &ChartParam, u: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    if chart.is_singular(u) {
        return Ok(vec![0.0; outputs]);
    }
    let x = chart.point(u);
    let j = chart.jacobian(u)?;
    let v = f(&x)?;
    if v.len() != outputs {
        return Err(Error::DimensionMismatch {
            left: outputs,
            right: v.len(),
        });
    }
    let out: Vec<f64> = v.iter().map(|c| c * j).collect();
    if out.iter().all(|c| c.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NonFinite { point: x })
    }
}

/// Sum of `weight(i)·g(point(i))` over `0..count`, in fixed chunk order.
fn accumulate<P>(count: u64, outputs: usize, eval: P) -> Result<Moments>
where
    P: Fn(u64, u64) -> Result<Moments> + Sync,
{
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| eval(c * CHUNK, (c * CHUNK + CHUNK).min(count)))
        .collect::<Result<_>>()?;
    let mut total = Moments::new(outputs);
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}

fn gauss_level<F>(f: &F, outputs: usize, chart: &ChartParam, nodes: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let d = chart.dim();
    let rule = GaussLegendre::new(NonZeroUsize::new(nodes).expect("validated"));
    // Nodes on [0, 1].
    let nw: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let count = (nodes as u64).pow(d as u32);
    let m = accumulate(count, outputs, |start, end| {
        let mut acc = Moments::new(outputs);
        let mut u = vec![0.0; d];
        for idx in start..end {
            let mut rest = idx;
            let mut w = 1.0;
            for ui in u.iter_mut() {
                let (x, wi) = nw[(rest % nodes as u64) as usize];
                *ui = x;
                w *= wi;
                rest /= nodes as u64;
            }
            let v = pulled_back(f, outputs, chart, &u)?;
            let wv: Vec<f64> = v.iter().map(|c| c * w).collect();
            acc.add(&wv);
        }
        Ok(acc)
    })?;
    Ok(m.sums())
}

fn shifts(seed: u64, replicates: u32, dim: usize) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..replicates)
        .map(|_| (0..dim).map(|_| rng.next_u32()).collect())
        .collect()
}

fn t_quantile(dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(f64::INFINITY)
}

/// Integrate the `outputs` components of `f` (a function of chart points)
/// over the chart image.
pub fn integrate<F>(f: &F, outputs: usize, chart: &ChartParam, rule: &Rule) -> Result<Vec<IntegralResult>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    rule.validate()?;
    let d = chart.dim();
    match *rule {
        Rule::Gauss { nodes } => {
            let coarse_nodes = (nodes / 2).max(1);
            let coarse = gauss_level(f, outputs, chart, coarse_nodes)?;
            let fine = gauss_level(f, outputs, chart, nodes)?;
            let ec = (coarse_nodes as u64).pow(d as u32);
            let ef = (nodes as u64).pow(d as u32);
            Ok((0..outputs)
                .map(|k| IntegralResult {
                    value: fine[k],
                    error: (fine[k] - coarse[k]).abs(),
                    evaluations: ec + ef,
                    trace: vec![
                        TracePoint {
                            evaluations: ec,
                            value: coarse[k],
                        },
                        TracePoint {
                            evaluations: ec + ef,
                            value: fine[k],
                        },
                    ],
                    seed: None,
                    method: Method::GaussTensor,
                })
                .collect())
        }
        Rule::Sobol {
            points,
            replicates,
            seed,
        } => {
            let sobol = Sobol::new(d)?;
            let mut means: Vec<Vec<f64>> = Vec::with_capacity(replicates as usize);
            for shift in shifts(seed, replicates, d) {
                let m = accumulate(points, outputs, |start, end| {
                    let mut acc = Moments::new(outputs);
                    for u in sobol.points(start, end - start, &shift) {
                        acc.add(&pulled_back(f, outputs, chart, &u)?);
                    }
                    Ok(acc)
                })?;
                means.push(m.sums().iter().map(|s| s / points as f64).collect());
            }
            let r = replicates as f64;
            let tq = t_quantile(r - 1.0);
            Ok((0..outputs)
                .map(|k| {
                    let mut trace = Vec::with_capacity(means.len());
                    let mut run = CompensatedSum::default();
                    for (i, m) in means.iter().enumerate() {
                        run.add(m[k]);
                        trace.push(TracePoint {
                            evaluations: (i as u64 + 1) * points,
                            value: run.value() / (i + 1) as f64,
                        });
                    }
                    let mean = run.value() / r;
                    let var = means.iter().map(|m| (m[k] - mean).powi(2)).sum::<f64>() / (r - 1.0);
                    IntegralResult {
                        value: mean,
                        error: tq * (var / r).sqrt(),
                        evaluations: points * replicates as u64,
                        trace,
                        seed: Some(seed),
                        method: Method::QmcSobol,
                    }
                })
                .collect())
        }
        Rule::MonteCarlo { points, seed } => {
            const BATCHES: u64 = 8;
            let per = points.div_ceil(BATCHES);
            let mut batches = Vec::new();
            let mut done = 0;
            for b in 0..BATCHES {
                let n = per.min(points - done);
                if n == 0 {
                    break;
                }
                let base = done;
                let m = accumulate(n, outputs, |start, end| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    // One stream per chunk keeps results independent of the
                    // thread count.
                    rng.set_stream((base + start) / CHUNK + b * (1 << 40));
                    let mut acc = Moments::new(outputs);
                    let mut u = vec![0.0; d];
                    for _ in start..end {
                        for ui in u.iter_mut() {
                            *ui = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                        }
                        acc.add(&pulled_back(f, outputs, chart, &u)?);
                    }
                    Ok(acc)
                })?;
                done += n;
                batches.push(m);
            }
            let mut total = Moments::new(outputs);
            let mut running = Vec::new();
            for m in &batches {
                total.merge(m);
                running.push((total.count, total.sums()));
            }
            let n = total.count as f64;
            Ok((0..outputs)
                .map(|k| {
                    let mean = total.sum[k].value() / n;
                    let var = (total.sumsq[k].value() / n - mean * mean).max(0.0) * n / (n - 1.0);
                    IntegralResult {
                        value: mean,
                        error: 1.96 * (var / n).sqrt(),
                        evaluations: total.count,
                        trace: running
                            .iter()
                            .map(|(c, s)| TracePoint {
                                evaluations: *c,
                                value: s[k] / *c as f64,
                            })
                            .collect(),
                        seed: Some(seed),
                        method: Method::MonteCarlo,
                    }
                })
                .collect())
        }
    }
}

/// Refine `rule` until every output's error estimate is at most `tol`, or
/// fail once the next rule would exceed `max_evaluations`.
pub fn integrate_to_tolerance<F>(
    f: &F,
    outputs: usize,
    chart: &ChartParam,
    rule: &Rule,
    tol: f64,
    max_evaluations: u64,
) -> Result<Vec<IntegralResult>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    let mut rule = *rule;
    loop {
        let res = integrate(f, outputs, chart, &rule)?;
        let worst = res.iter().map(|r| r.error).fold(0.0, f64::max);
        if worst <= tol {
            return Ok(res);
        }
        let next = rule.refined(chart.dim());
        if estimated_evaluations(&next, chart.dim()) > max_evaluations {
            return Err(Error::BudgetExhausted {
                estimate: worst,
                tolerance: tol,
            });
        }
        rule = next;
    }
}

pub fn estimated_evaluations(rule: &Rule, dim: usize) -> u64 {
    match *rule {
        Rule::Gauss { nodes } => {
            (nodes as u64).pow(dim as u32) + ((nodes / 2).max(1) as u64).pow(dim as u32)
        }
        Rule::Sobol {
            points, replicates, ..
        } => points * replicates as u64,
        Rule::MonteCarlo { points, .. } => points,
    }
}

/// Results for each rule in `rules`, in order.
pub fn convergence_study<F>(
    f: &F,
    outputs: usize,
    chart: &ChartParam,
    rules: &[Rule],
) -> Result<Vec<Vec<IntegralResult>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + Sync,
{
    rules.iter().map(|r| integrate(f, outputs, chart, r)).collect()
}
