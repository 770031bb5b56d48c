//! Report values and their serialization.

use std::fmt::Write as _;
use std::str::FromStr;

use hrr_core::calculus::FdConfig;
use hrr_core::catalog::ManifoldSpec;
use hrr_core::quadrature::{IntegralResult, Rule};
use serde_json::{json, Map, Number, Value};

pub const SCHEMA: u32 = 1;

/// JSON number with 17 significant digits, `null` if not finite.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    let text = format!("{v:.16e}");
    Value::Number(Number::from_str(&text).expect("formatted float is a JSON number"))
}

pub fn fd_json(cfg: &FdConfig) -> Value {
    json!({
        "step": num(cfg.step),
        "order": cfg.order.as_u32(),
        "richardson": cfg.richardson,
    })
}

pub fn rule_json(rule: &Rule) -> Value {
    match *rule {
        Rule::Gauss { nodes } => json!({ "method": "gauss", "nodes": nodes }),
        Rule::Sobol {
            points,
            replicates,
            seed,
        } => json!({ "method": "qmc", "points": points, "replicates": replicates, "seed": seed }),
        Rule::MonteCarlo { points, seed } => json!({ "method": "mc", "points": points, "seed": seed }),
    }
}

pub fn manifold_json(spec: &ManifoldSpec) -> Value {
    json!({
        "name": spec.name,
        "n": spec.n,
        "chart": spec.chart.name(),
        "twist": spec.twist.charge,
        "expected_index": spec.expected_index,
        "kahler": spec.flags.kahler,
        "skt": spec.flags.skt,
    })
}

pub fn integral_json(r: &IntegralResult) -> Value {
    json!({
        "value": num(r.value),
        "error_estimate": num(r.error),
        "evaluations": r.evaluations,
    })
}

pub fn environment(threads: usize) -> Value {
    json!({
        "program": "hrr",
        "version": env!("CARGO_PKG_VERSION"),
        "os": std::env::consts::OS,
        "arch": std::env::consts::ARCH,
        "threads": threads,
    })
}

/// Top-level report object; fields appear in insertion order.
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut fields = Map::new();
        fields.insert("schema".into(), json!(SCHEMA));
        fields.insert("command".into(), json!(command));
        Self { fields }
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.fields.insert(key.into(), value);
    }

    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.fields).expect("report serializes");
        out.push('\n');
        out
    }
}

/// Plain-text table with left-aligned columns.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self) -> String {
        let widths: Vec<usize> = (0..self.header.len())
            .map(|i| {
                self.rows
                    .iter()
                    .map(|r| r[i].chars().count())
                    .chain([self.header[i].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        let line = |out: &mut String, cells: &[String]| {
            let text: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            let _ = writeln!(out, "{}", text.join("  ").trim_end());
        };
        line(&mut out, &self.header);
        for r in &self.rows {
            line(&mut out, r);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(-3.0).to_string(), "-3.0000000000000000e+0");
        assert_eq!(num(f64::NAN), Value::Null);
        let back: f64 = num(1.0 / 3.0).to_string().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn report_keeps_insertion_order() {
        let mut r = Report::new("index");
        r.set("zeta", json!(1));
        r.set("alpha", json!(2));
        let text = r.to_json();
        assert!(text.find("zeta").unwrap() < text.find("alpha").unwrap());
        assert!(text.starts_with("{\n  \"schema\": 1,"));
    }

    #[test]
    fn table_aligns_columns() {
        let mut t = Table::new(&["a", "value"]);
        t.row(vec!["long".into(), "1".into()]);
        assert_eq!(t.render(), "a     value\nlong  1\n");
    }
}
