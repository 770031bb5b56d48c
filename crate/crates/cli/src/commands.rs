use std::path::{Path, PathBuf};
use std::time::Instant;

use hrr_core::calculus::{complex_coords, Domain, FdConfig};
use hrr_core::catalog::{
    builtin, dolbeault_laplacian0, form_norm, fs_unit_twist, hopf_identification_residual, hopf_identities,
    hopf_metric, ChartKind, ManifoldSpec, FLAG_TOL,
};
use hrr_core::characteristic::{IndexFormula, DEFORMATION_GRID, PRECONDITION_TOL};
use hrr_core::exterior::PolyForm;
use hrr_core::geometry::{ConnectionChoice, Geometry, HermitianMetricField};
use hrr_core::quadrature::{Method, Rule, DEFAULT_REPLICATES};
use hrr_core::Error;
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::report::{environment, fd_json, integral_json, manifold_json, num, rule_json, Report, Table};
use crate::{CheckArgs, ConvergenceArgs, Failure, IndexArgs, LaplacianArgs, Numerics, Output, ParseArgs, Target};

/// Tolerance of `index` for Gauss rules; QMC and MC use `SAMPLED_INDEX_TOL`.
const GAUSS_INDEX_TOL: f64 = 1e-3;
const SAMPLED_INDEX_TOL: f64 = 0.05;
const IDENTITY_TOL: f64 = 1e-6;
const HOPF_TOL: f64 = 1e-8;
const LAPLACIAN_TOL: f64 = 1e-7;
const DEFORMATION_TOL: f64 = 1e-3;
/// Points at which formula preconditions are measured before integrating.
const PRECONDITION_POINTS: usize = 8;

const SUITES: [&str; 6] = ["connections", "bianchi", "skt", "hopf", "maurer-cartan", "deformation"];

fn load(target: &Target) -> Result<ManifoldSpec, Failure> {
    let name = target.name.as_ref().or(target.manifold.as_ref());
    match (name, &target.metric_file) {
        (Some(name), None) => Ok(builtin(name, target.twist)?),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(path.clone(), e))?;
            let mut spec = ManifoldSpec::from_text(&text).map_err(|e| match e {
                Error::Dsl(d) => Failure::Usage(format!("{}:{d}", path.display())),
                other => Failure::Core(other),
            })?;
            if let Some(k) = target.twist {
                if spec.chart != ChartKind::Cp || spec.n != 1 {
                    return Err(Error::UnsupportedParam {
                        manifold: spec.name,
                        detail: format!("twist charge {k} (only CP¹ metrics carry a twist)"),
                    }
                    .into());
                }
                spec.twist = fs_unit_twist().with_charge(k);
                spec.expected_index = Some(k + 1);
            }
            Ok(spec)
        }
        (None, None) => Err(Failure::Usage("give a manifold name or --metric-file".into())),
        (Some(_), Some(_)) => Err(Failure::Usage("give either a manifold name or --metric-file, not both".into())),
    }
}

fn fd_config(numerics: &Numerics, default: FdConfig) -> Result<FdConfig, Failure> {
    let mut cfg = default;
    if let Some(h) = numerics.fd_step {
        cfg.step = h;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_formulas(text: &str) -> Result<Vec<IndexFormula>, Failure> {
    if text.trim().eq_ignore_ascii_case("all") {
        return Ok(IndexFormula::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in text.split(',') {
        let f: IndexFormula = part.trim().parse().map_err(Failure::Usage)?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

/// Gauss nodes per axis when no budget is given.
fn default_nodes(spec: &ManifoldSpec) -> usize {
    match (2 * spec.n, spec.chart) {
        (2, _) => 64,
        (4, ChartKind::Cp) => 16,
        (4, _) => 8,
        _ => 4,
    }
}

/// Rule applied on each patch. A budget counts evaluations over all patches.
fn choose_rule(spec: &ManifoldSpec, numerics: &Numerics, patches: usize) -> Result<Rule, Failure> {
    let dim = 2 * spec.n;
    let method = numerics.method.unwrap_or(Method::default_for(dim));
    let seed = numerics.seed;
    if let Some(b) = numerics.budget {
        return Ok(Rule::from_budget(method, (b / patches as u64).max(1), dim, seed)?);
    }
    let rule = match method {
        Method::GaussTensor => Rule::Gauss {
            nodes: default_nodes(spec),
        },
        Method::QmcSobol => Rule::Sobol {
            points: if numerics.slow { 1_250_000 } else { 2048 },
            replicates: DEFAULT_REPLICATES,
            seed,
        },
        Method::MonteCarlo => Rule::MonteCarlo {
            points: if numerics.slow { 10_000_000 } else { 16_384 },
            seed,
        },
    };
    rule.validate()?;
    Ok(rule)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn finish(report: &Report, output: &Output, table: &str) -> Result<(), Failure> {
    print!("{table}");
    if let Some(path) = &output.json {
        write_file(path, &report.to_json())?;
    }
    Ok(())
}

fn sci(v: f64) -> String {
    format!("{v:.3e}")
}

fn status(pass: bool) -> String {
    if pass { "ok" } else { "FAIL" }.to_string()
}

pub fn index(args: &IndexArgs, threads: usize) -> Result<bool, Failure> {
    let spec = load(&args.target)?;
    let formulas = parse_formulas(&args.formula)?;
    let fd = fd_config(&args.numerics, FdConfig::default())?;
    let patches = spec.patches(fd).len();
    let rule = choose_rule(&spec, &args.numerics, patches)?;
    let tol = args.numerics.tol.unwrap_or(match rule.method() {
        Method::GaussTensor => GAUSS_INDEX_TOL,
        _ => SAMPLED_INDEX_TOL,
    });

    let engine = spec.engine(fd);
    let points = spec.sample_points(PRECONDITION_POINTS, args.numerics.seed);
    let mut preconditions = Vec::new();
    for &f in &formulas {
        if let Some((condition, residual)) = engine.precondition_residual(f, &points)? {
            let satisfied = residual <= PRECONDITION_TOL;
            if !satisfied && !args.force {
                return Err(Error::Precondition {
                    formula: f.name().into(),
                    condition: condition.into(),
                    residual,
                    tolerance: PRECONDITION_TOL,
                }
                .into());
            }
            preconditions.push(json!({
                "formula": f.name(),
                "condition": condition,
                "residual": num(residual),
                "satisfied": satisfied,
            }));
        }
    }

    let start = Instant::now();
    let results = spec.integrate_index(&formulas, fd, &rule)?;
    let elapsed = start.elapsed();

    let mut table = Table::new(&["formula", "value", "error", "nearest", "deviation", "status"]);
    let mut rows = Vec::new();
    let mut pass = true;
    let mut exhausted = None;
    for (f, r) in formulas.iter().zip(&results) {
        let nearest = r.value.round() + 0.0;
        let deviation = match spec.expected_index {
            Some(k) => (r.value - k as f64).abs(),
            None => (r.value - nearest).abs(),
        };
        let within = spec.expected_index.is_none() || deviation <= tol;
        let resolved = r.error <= tol;
        if !resolved {
            exhausted.get_or_insert(r.error);
        }
        pass &= within && resolved;
        table.row(vec![
            f.name().into(),
            format!("{:.9}", r.value),
            sci(r.error),
            format!("{nearest:.0}"),
            sci(deviation),
            status(within && resolved),
        ]);
        let mut row = json!({ "formula": f.name() });
        row.as_object_mut()
            .expect("object")
            .extend(integral_json(r).as_object().expect("object").clone());
        row["nearest_integer"] = json!(nearest as i64);
        row["deviation"] = num(deviation);
        row["pass"] = json!(within && resolved);
        rows.push(row);
    }

    let mut report = Report::new("index");
    report.set("manifold", manifold_json(&spec));
    report.set(
        "config",
        json!({
            "formulas": formulas.iter().map(|f| f.name()).collect::<Vec<_>>(),
            "rule": rule_json(&rule),
            "patches": patches,
            "budget": args.numerics.budget,
            "tolerance": num(tol),
            "precondition_tolerance": num(PRECONDITION_TOL),
            "fd": fd_json(&fd),
            "seed": args.numerics.seed,
            "force": args.force,
        }),
    );
    report.set("preconditions", Value::Array(preconditions));
    report.set("results", Value::Array(rows));
    report.set("environment", environment(threads));
    report.set("pass", json!(pass));

    let mut text = format!(
        "{} (n = {}, twist {}, expected index {}) with {} on {} patch(es)\n",
        spec.name,
        spec.n,
        spec.twist.charge,
        spec.expected_index.map_or("none".into(), |k| k.to_string()),
        rule_label(&rule),
        patches
    );
    text.push_str(&table.render());
    text.push_str(&format!("elapsed {:.1} s\n", elapsed.as_secs_f64()));
    finish(&report, &args.output, &text)?;
    if let Some(estimate) = exhausted {
        return Err(Error::BudgetExhausted { estimate, tolerance: tol }.into());
    }
    Ok(pass)
}

fn rule_label(rule: &Rule) -> String {
    match *rule {
        Rule::Gauss { nodes } => format!("Gauss {nodes} nodes per axis"),
        Rule::Sobol {
            points, replicates, ..
        } => format!("Sobol {points} points x {replicates} shifts"),
        Rule::MonteCarlo { points, .. } => format!("Monte Carlo {points} points"),
    }
}

/// Maximum residual of one identity over the sample points.
struct Row {
    identity: String,
    residual: f64,
    tolerance: f64,
}

fn max_over<F>(points: &[Vec<f64>], f: F) -> Result<f64, Failure>
where
    F: Fn(&[f64]) -> hrr_core::Result<f64>,
{
    let mut worst: f64 = 0.0;
    for p in points {
        worst = worst.max(f(p)?);
    }
    Ok(worst)
}

fn inapplicable(suite: &str, spec: &ManifoldSpec, why: &str) -> Failure {
    Failure::Usage(format!("suite `{suite}` does not apply to `{}`: {why}", spec.name))
}

/// Whether the metric is `δ/(z̄z)` at the sample points.
fn is_standard_hopf(spec: &ManifoldSpec, points: &[Vec<f64>]) -> Result<bool, Failure> {
    if spec.chart != ChartKind::Hopf {
        return Ok(false);
    }
    let reference = hopf_metric(spec.n);
    for p in points {
        let d = (spec.metric.eval(p)? - reference.eval(p)?).norm();
        if d > 1e-12 * reference.eval(p)?.norm() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn rows_table(rows: &[Row]) -> (Table, Vec<Value>, bool) {
    let mut table = Table::new(&["identity", "max residual", "tolerance", "status"]);
    let mut json_rows = Vec::new();
    let mut pass = true;
    for r in rows {
        let ok = r.residual <= r.tolerance;
        pass &= ok;
        table.row(vec![r.identity.clone(), sci(r.residual), sci(r.tolerance), status(ok)]);
        json_rows.push(json!({
            "identity": r.identity,
            "max_residual": num(r.residual),
            "tolerance": num(r.tolerance),
            "pass": ok,
        }));
    }
    (table, json_rows, pass)
}

pub fn check(args: &CheckArgs, threads: usize) -> Result<bool, Failure> {
    let suite = args.suite.as_str();
    if !SUITES.contains(&suite) {
        return Err(Failure::Usage(format!("unknown suite `{suite}` (expected one of {})", SUITES.join(", "))));
    }
    let spec = load(&args.target)?;
    let seed = args.numerics.seed;
    let points = spec.sample_points(args.points, seed);
    let default_fd = if suite == "hopf" { FdConfig::precise() } else { FdConfig::default() };
    let fd = fd_config(&args.numerics, default_fd)?;
    let geometry = spec.geometry(fd);
    let mut rows = Vec::new();
    let mut extra = None;
    match suite {
        "connections" => {
            let tol = args.numerics.tol.unwrap_or(IDENTITY_TOL);
            for c in ConnectionChoice::ALL {
                let g = &geometry;
                rows.push(Row {
                    identity: format!("nabla g / {}", c.name()),
                    residual: max_over(&points, |x| g.with_memo().metric_compatibility(c, x))?,
                    tolerance: tol,
                });
                if c.preserves_complex_structure() {
                    rows.push(Row {
                        identity: format!("nabla I / {}", c.name()),
                        residual: max_over(&points, |x| g.with_memo().complex_structure_compatibility(c, x))?,
                        tolerance: tol,
                    });
                }
            }
            for c in [ConnectionChoice::LeviCivita, ConnectionChoice::Bismut] {
                rows.push(Row {
                    identity: format!("maurer-cartan / {}", c.name()),
                    residual: max_over(&points, |x| geometry.with_memo().maurer_cartan_residual(c, x))?,
                    tolerance: tol,
                });
            }
        }
        "maurer-cartan" | "bianchi" => {
            let tol = args.numerics.tol.unwrap_or(IDENTITY_TOL);
            for c in ConnectionChoice::ALL {
                let residual = if suite == "bianchi" {
                    max_over(&points, |x| geometry.with_memo().bianchi_residual(c, x))?
                } else {
                    max_over(&points, |x| geometry.with_memo().maurer_cartan_residual(c, x))?
                };
                rows.push(Row {
                    identity: format!("{suite} / {}", c.name()),
                    residual,
                    tolerance: tol,
                });
            }
        }
        "skt" => {
            if !spec.flags.skt {
                return Err(inapplicable(suite, &spec, "the metric is not SKT"));
            }
            let tol = args.numerics.tol.unwrap_or(FLAG_TOL);
            rows.push(Row {
                identity: "ddbar omega".into(),
                residual: max_over(&points, |x| geometry.with_memo().skt_residual(x))?,
                tolerance: tol,
            });
            if spec.flags.kahler {
                rows.push(Row {
                    identity: "d omega".into(),
                    residual: max_over(&points, |x| Ok(geometry.with_memo().d_kahler_form(x)?.max_abs()))?,
                    tolerance: tol,
                });
            }
        }
        "hopf" => {
            if !is_standard_hopf(&spec, &points)? || spec.n != 2 {
                return Err(inapplicable(suite, &spec, "needs the Hopf metric with n = 2"));
            }
            let tol = args.numerics.tol.unwrap_or(HOPF_TOL);
            let mut ff: f64 = 0.0;
            let mut rr: f64 = 0.0;
            for p in &points {
                let r = hopf_identities(&geometry, p)?;
                ff = ff.max(r.ff);
                rr = rr.max(r.rr);
            }
            let ident = max_over(&points, |x| hopf_identification_residual(spec.metric.as_ref(), x))?;
            for (identity, residual) in [("F0 ^ F0", ff), ("R ^ R", rr), ("h(2z) = h(z)/4", ident)] {
                rows.push(Row {
                    identity: identity.into(),
                    residual,
                    tolerance: tol,
                });
            }
        }
        "deformation" => {
            let tol = args.numerics.tol.unwrap_or(DEFORMATION_TOL);
            let patches = spec.patches(fd).len();
            let mut rule = choose_rule(&spec, &args.numerics, patches)?;
            if let (Rule::Gauss { nodes }, ChartKind::Hopf, None) = (&mut rule, spec.chart, args.numerics.budget) {
                // The deformed Hopf metric needs a finer grid than the round one.
                *nodes = (*nodes).max(12);
            }
            let probe = spec.deformation_probe(IndexFormula::ToddHRR, fd, &rule, &DEFORMATION_GRID)?;
            let base = probe[0].result.value;
            let drift = probe.iter().map(|p| (p.result.value - base).abs()).fold(0.0, f64::max);
            rows.push(Row {
                identity: "index drift (todd)".into(),
                residual: drift,
                tolerance: tol,
            });
            extra = Some(json!({
                "formula": "todd",
                "rule": rule_json(&rule),
                "values": probe.iter().map(|p| json!({ "t": num(p.t), "value": num(p.result.value), "error_estimate": num(p.result.error) })).collect::<Vec<_>>(),
            }));
        }
        _ => unreachable!("suite validated above"),
    }

    let (table, json_rows, pass) = rows_table(&rows);
    let mut report = Report::new("check");
    report.set("manifold", manifold_json(&spec));
    report.set(
        "config",
        json!({
            "suite": suite,
            "points": args.points,
            "seed": seed,
            "fd": fd_json(&fd),
        }),
    );
    report.set("rows", Value::Array(json_rows));
    if let Some(e) = extra {
        report.set("deformation", e);
    }
    report.set("environment", environment(threads));
    report.set("pass", json!(pass));
    let text = format!("{} / {suite} at {} points\n{}", spec.name, args.points, table.render());
    finish(&report, &args.output, &text)?;
    Ok(pass)
}

fn parse_levels(text: &str) -> Result<Vec<u64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Failure::Usage(format!("invalid level `{}`", s.trim())))
        })
        .collect()
}

pub fn convergence(args: &ConvergenceArgs, threads: usize) -> Result<bool, Failure> {
    let spec = load(&args.target)?;
    let formulas = parse_formulas(&args.formula)?;
    let [formula] = formulas[..] else {
        return Err(Failure::Usage("convergence takes a single formula".into()));
    };
    let fd = fd_config(&args.numerics, FdConfig::default())?;
    let dim = 2 * spec.n;
    let method = args.numerics.method.unwrap_or(Method::default_for(dim));
    let levels = match &args.levels {
        Some(t) => parse_levels(t)?,
        None => match (method, dim) {
            (Method::GaussTensor, 2) => vec![8, 16, 32, 64],
            (Method::GaussTensor, 4) => vec![4, 8, 12],
            (Method::GaussTensor, _) => vec![2, 4],
            (Method::QmcSobol, _) => vec![256, 1024, 4096],
            (Method::MonteCarlo, _) => vec![1024, 4096, 16_384],
        },
    };
    let seed = args.numerics.seed;
    let mut csv = String::from("level,evaluations,value,error_estimate\n");
    let mut rows = Vec::new();
    let mut rules = Vec::new();
    for &level in &levels {
        let rule = match method {
            Method::GaussTensor => Rule::Gauss { nodes: level as usize },
            Method::QmcSobol => Rule::Sobol {
                points: level,
                replicates: DEFAULT_REPLICATES,
                seed,
            },
            Method::MonteCarlo => Rule::MonteCarlo { points: level, seed },
        };
        rule.validate()?;
        let r = spec.integrate_index(&[formula], fd, &rule)?.remove(0);
        csv.push_str(&format!("{level},{},{:.16e},{:.16e}\n", r.evaluations, r.value, r.error));
        let mut row = json!({ "level": level });
        row.as_object_mut()
            .expect("object")
            .extend(integral_json(&r).as_object().expect("object").clone());
        rows.push(row);
        rules.push(rule_json(&rule));
    }
    let mut report = Report::new("convergence");
    report.set("manifold", manifold_json(&spec));
    report.set(
        "config",
        json!({
            "formula": formula.name(),
            "method": method.name(),
            "rules": rules,
            "patches": spec.patches(fd).len(),
            "fd": fd_json(&fd),
            "seed": seed,
        }),
    );
    report.set("levels", Value::Array(rows));
    report.set("environment", environment(threads));
    let table = match &args.output.csv {
        Some(path) => {
            write_file(path, &csv)?;
            String::new()
        }
        None => csv,
    };
    finish(&report, &args.output, &table)?;
    Ok(true)
}

type ScalarFn = Box<dyn Fn(&[f64]) -> hrr_core::Result<Complex64>>;

pub fn laplacian(args: &LaplacianArgs, threads: usize) -> Result<bool, Failure> {
    let spec = load(&args.target)?;
    let points = spec.sample_points(args.points, args.numerics.seed);
    if !is_standard_hopf(&spec, &points)? {
        return Err(Failure::Usage(format!(
            "the Laplacian probe needs the Hopf metric δ/(z̄z), not `{}`",
            spec.name
        )));
    }
    let fd = fd_config(&args.numerics, FdConfig::precise())?;
    let tol = args.numerics.tol.unwrap_or(LAPLACIAN_TOL);
    let domain: Domain = spec.chart.domain();
    let probes: Vec<(&str, ScalarFn)> = vec![
        ("1", Box::new(|_: &[f64]| Ok(Complex64::new(1.0, 0.0)))),
        (
            "ln(zbar z)",
            Box::new(|y: &[f64]| Ok(Complex64::new(y.iter().map(|v| v * v).sum::<f64>().ln(), 0.0))),
        ),
        ("conj(z1)", Box::new(|y: &[f64]| Ok(Complex64::new(y[0], -y[1])))),
    ];
    let mut rows = Vec::new();
    for (name, f) in &probes {
        rows.push(Row {
            identity: format!("laplacian {name}"),
            residual: max_over(&points, |x| Ok(dolbeault_laplacian0(f, x, &fd, &domain)?.norm()))?,
            tolerance: tol,
        });
    }
    let geometry = Geometry::new(spec.metric.clone(), fd);
    let norm_defect = max_over(&points, |x| {
        let z = complex_coords(x);
        let zz: f64 = z.iter().map(|v| v.norm_sqr()).sum();
        let mut coeffs = Vec::with_capacity(x.len());
        for zj in &z {
            let pj = zj.conj() / zz;
            coeffs.push(pj);
            coeffs.push(pj * Complex64::i());
        }
        let p = PolyForm::one_form(&coeffs);
        Ok((form_norm(&p, &geometry.metric_at(x)?)? - 1.0).abs())
    })?;
    rows.push(Row {
        identity: "|P|^2 - 1".into(),
        residual: norm_defect,
        tolerance: tol,
    });
    let (table, json_rows, pass) = rows_table(&rows);
    let mut report = Report::new("laplacian");
    report.set("manifold", manifold_json(&spec));
    report.set(
        "config",
        json!({ "points": args.points, "seed": args.numerics.seed, "fd": fd_json(&fd) }),
    );
    report.set("rows", Value::Array(json_rows));
    report.set("environment", environment(threads));
    report.set("pass", json!(pass));
    let text = format!("{} Dolbeault Laplacian at {} points\n{}", spec.name, args.points, table.render());
    finish(&report, &args.output, &text)?;
    Ok(pass)
}

pub fn parse(args: &ParseArgs, threads: usize) -> Result<bool, Failure> {
    let path: PathBuf = args
        .path
        .clone()
        .or_else(|| args.metric_file.clone())
        .ok_or_else(|| Failure::Usage("give a metric file".into()))?;
    let target = Target {
        name: None,
        manifold: None,
        metric_file: Some(path.clone()),
        twist: None,
    };
    let spec = load(&target)?;
    let mut report = Report::new("parse");
    report.set("file", json!(path.display().to_string()));
    report.set("manifold", manifold_json(&spec));
    report.set("environment", environment(threads));
    report.set("pass", json!(true));
    let text = format!(
        "{}: ok ({}, n = {}, chart {}, kahler {}, skt {})\n",
        path.display(),
        spec.name,
        spec.n,
        spec.chart.name(),
        spec.flags.kahler,
        spec.flags.skt
    );
    finish(
        &report,
        &Output {
            json: args.json.clone(),
            csv: None,
        },
        &text,
    )?;
    Ok(true)
}
