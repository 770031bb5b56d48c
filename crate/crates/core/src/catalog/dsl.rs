//! Text format for Hermitian metrics.
//!
//! ```text
//! # Fubini–Study metric on CP¹
//! @name fs
//! @chart cp
//! @twist 2
//! @expected_index 3
//! h[1][1] = 1/(1 + abs2(z1))^2
//! ```
//!
//! One assignment `h[j][k] = expr` per line with 1-based indices, `#` starts a
//! comment. Expressions:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' ['-'] integer)?
//! primary := number | number 'i' | 'i' | 'pi' | 'z'N
//!          | ('conj' | 'abs2' | 'ln' | 'exp') '(' expr ')' | '(' expr ')'
//! ```
//!
//! A missing off-diagonal entry is the conjugate of its mirror. Every
//! diagonal entry must be given.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{complex_coords, Domain};
use crate::error::Result;
use crate::geometry::{cholesky, CMatrix, HermitianMetricField};

use super::ChartKind;

/// Points sampled when validating a parsed metric.
pub const VALIDATION_POINTS: usize = 100;
/// Seed of the validation sample.
pub const VALIDATION_SEED: u64 = 0x5eed;
/// Relative Hermiticity defect accepted at sampled points.
pub const HERMITICITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DslErrorKind {
    Syntax,
    Directive,
    Hermiticity,
    PositiveDefinite,
    Evaluation,
}

/// Metric-file error with a 1-based source position.
#[derive(Clone, Debug, PartialEq)]
pub struct DslError {
    pub kind: DslErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl DslError {
    fn new(kind: DslErrorKind, line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            kind,
            line,
            column,
            message: message.into(),
            expected: Vec::new(),
        }
    }

    fn expecting(mut self, expected: &[&str]) -> Self {
        self.expected = expected.iter().map(|s| s.to_string()).collect();
        self
    }
}

impl fmt::Display for DslError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for DslError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Conj,
    Abs2,
    Ln,
    Exp,
}

impl Func {
    pub const ALL: [Func; 4] = [Func::Conj, Func::Abs2, Func::Ln, Func::Exp];

    pub fn name(self) -> &'static str {
        match self {
            Func::Conj => "conj",
            Func::Abs2 => "abs2",
            Func::Ln => "ln",
            Func::Exp => "exp",
        }
    }

    fn apply(self, v: Complex64) -> Complex64 {
        match self {
            Func::Conj => v.conj(),
            Func::Abs2 => Complex64::new(v.norm_sqr(), 0.0),
            Func::Ln => v.ln(),
            Func::Exp => v.exp(),
        }
    }
}

/// Metric entry expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    /// Nonnegative real literal.
    Num(f64),
    /// Imaginary literal `v i`.
    Imag(f64),
    I,
    Pi,
    /// Coordinate `z_j`, 1-based.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Value at complex coordinates `z` (0-based slice).
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let c = |v: f64| Complex64::new(v, 0.0);
        match self {
            Expr::Num(v) => c(*v),
            Expr::Imag(v) => Complex64::new(0.0, *v),
            Expr::I => Complex64::i(),
            Expr::Pi => c(PI),
            Expr::Var(j) => z.get(j - 1).copied().unwrap_or(c(f64::NAN)),
            Expr::Neg(a) => -a.eval(z),
            Expr::Add(a, b) => a.eval(z) + b.eval(z),
            Expr::Sub(a, b) => a.eval(z) - b.eval(z),
            Expr::Mul(a, b) => a.eval(z) * b.eval(z),
            Expr::Div(a, b) => a.eval(z) / b.eval(z),
            Expr::Pow(a, k) => a.eval(z).powi(*k),
            Expr::Call(f, a) => f.apply(a.eval(z)),
        }
    }

    /// Largest coordinate index used.
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Var(j) => *j,
            Expr::Num(_) | Expr::Imag(_) | Expr::I | Expr::Pi => 0,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_var().max(b.max_var())
            }
        }
    }
}

/// Fully parenthesized, so that parsing the output gives the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Imag(v) => write!(f, "{v}i"),
            Expr::I => f.write_str("i"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(j) => write!(f, "z{j}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Imag(f64),
    Ident(String),
    Int(i64),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) | Tok::Imag(v) => format!("number `{v}`"),
            Tok::Int(v) => format!("integer `{v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of line".into(),
        }
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    /// Column of `chars[0]` in the source line.
    base: usize,
}

impl Lexer {
    fn new(src: &str, line: usize, base: usize) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
            base,
        }
    }

    fn column(&self, pos: usize) -> usize {
        self.base + pos
    }

    fn tokens(mut self) -> std::result::Result<Vec<(Tok, usize)>, DslError> {
        let mut out = Vec::new();
        loop {
            while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
                self.pos += 1;
            }
            let start = self.pos;
            let col = self.column(start);
            let Some(&c) = self.chars.get(self.pos) else {
                out.push((Tok::End, col));
                return Ok(out);
            };
            if c.is_ascii_digit() || c == '.' {
                out.push((self.number()?, col));
            } else if c.is_ascii_alphabetic() || c == '_' {
                while self
                    .chars
                    .get(self.pos)
                    .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_')
                {
                    self.pos += 1;
                }
                let s: String = self.chars[start..self.pos].iter().collect();
                out.push((Tok::Ident(s), col));
            } else if "+-*/^()[]=".contains(c) {
                self.pos += 1;
                out.push((Tok::Sym(c), col));
            } else {
                return Err(DslError::new(
                    DslErrorKind::Syntax,
                    self.line,
                    col,
                    format!("unexpected character `{c}`"),
                ));
            }
        }
    }

    fn number(&mut self) -> std::result::Result<Tok, DslError> {
        let start = self.pos;
        let digits = |l: &mut Self| {
            let s = l.pos;
            while l.chars.get(l.pos).is_some_and(|c| c.is_ascii_digit()) {
                l.pos += 1;
            }
            l.pos - s
        };
        let mut n = digits(self);
        let mut integral = true;
        if self.chars.get(self.pos) == Some(&'.') {
            self.pos += 1;
            n += digits(self);
            integral = false;
        }
        if n == 0 {
            return Err(DslError::new(
                DslErrorKind::Syntax,
                self.line,
                self.column(start),
                "malformed number",
            )
            .expecting(&["digit"]));
        }
        if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.chars.get(self.pos), Some('+' | '-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // Not an exponent after all.
                self.pos = save;
            } else {
                integral = false;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        let value: f64 = text.parse().map_err(|_| {
            DslError::new(
                DslErrorKind::Syntax,
                self.line,
                self.column(start),
                format!("malformed number `{text}`"),
            )
        })?;
        let imaginary = self.chars.get(self.pos) == Some(&'i')
            && !self
                .chars
                .get(self.pos + 1)
                .is_some_and(|c| c.is_ascii_alphanumeric() || *c == '_');
        if imaginary {
            self.pos += 1;
            return Ok(Tok::Imag(value));
        }
        if integral {
            if let Ok(i) = text.parse::<i64>() {
                return Ok(Tok::Int(i));
            }
        }
        Ok(Tok::Num(value))
    }
}

const PRIMARY_EXPECTED: [&str; 5] = ["number", "coordinate zN", "i or pi", "conj, abs2, ln or exp", "`(`"];

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
    /// Coordinate uses with their columns.
    vars: Vec<(usize, usize)>,
}

impl Parser {
    fn new(toks: Vec<(Tok, usize)>, line: usize) -> Self {
        Self {
            toks,
            pos: 0,
            line,
            vars: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>, expected: &[&str]) -> DslError {
        DslError::new(DslErrorKind::Syntax, self.line, self.col(), message).expecting(expected)
    }

    fn unexpected(&self, expected: &[&str]) -> DslError {
        self.error(format!("unexpected {}", self.peek().describe()), expected)
    }

    fn expect_sym(&mut self, c: char) -> std::result::Result<(), DslError> {
        if *self.peek() == Tok::Sym(c) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&[&format!("`{c}`")]))
        }
    }

    fn expect_end(&self) -> std::result::Result<(), DslError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.unexpected(&["operator", "end of line"]))
        }
    }

    fn expr(&mut self) -> std::result::Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Sym('-') => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> std::result::Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Sym('/') => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<Expr, DslError> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<Expr, DslError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let negative = *self.peek() == Tok::Sym('-');
        if negative {
            self.bump();
        }
        match self.peek().clone() {
            Tok::Int(k) if k <= i32::MAX as i64 => {
                self.bump();
                let k = k as i32;
                Ok(Expr::Pow(Box::new(base), if negative { -k } else { k }))
            }
            Tok::Num(_) => Err(self.error("only integer powers are supported", &["integer"])),
            _ => Err(self.unexpected(&["integer"])),
        }
    }

    fn primary(&mut self) -> std::result::Result<Expr, DslError> {
        let col = self.col();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Num(v as f64))
            }
            Tok::Imag(v) => {
                self.bump();
                Ok(Expr::Imag(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(s) => {
                if s == "i" {
                    self.bump();
                    return Ok(Expr::I);
                }
                if s == "pi" {
                    self.bump();
                    return Ok(Expr::Pi);
                }
                if let Some(j) = coordinate_index(&s) {
                    self.bump();
                    self.vars.push((j, col));
                    return Ok(Expr::Var(j));
                }
                if let Some(func) = Func::ALL.iter().copied().find(|f| f.name() == s) {
                    self.bump();
                    self.expect_sym('(')?;
                    let e = self.expr()?;
                    self.expect_sym(')')?;
                    return Ok(Expr::Call(func, Box::new(e)));
                }
                Err(self.error(format!("unknown name `{s}`"), &PRIMARY_EXPECTED))
            }
            _ => Err(self.unexpected(&PRIMARY_EXPECTED)),
        }
    }
}

fn coordinate_index(s: &str) -> Option<usize> {
    let digits = s.strip_prefix('z')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Parse a single expression.
pub fn parse_expr(text: &str) -> std::result::Result<Expr, DslError> {
    let toks = Lexer::new(text, 1, 1).tokens()?;
    let mut p = Parser::new(toks, 1);
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

/// One `h[j][k] = expr` line (0-based indices).
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub expr: Expr,
    pub line: usize,
}

/// Parsed metric file before numerical validation.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricFile {
    pub name: Option<String>,
    pub n: usize,
    pub chart: ChartKind,
    pub twist: Option<i64>,
    pub expected_index: Option<i64>,
    pub entries: Vec<Entry>,
}

impl MetricFile {
    /// Canonical text; parsing it yields an equal `MetricFile`, up to line numbers.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            out.push_str(&format!("@name {name}\n"));
        }
        out.push_str(&format!("@n {}\n@chart {}\n", self.n, self.chart.name()));
        if let Some(k) = self.twist {
            out.push_str(&format!("@twist {k}\n"));
        }
        if let Some(k) = self.expected_index {
            out.push_str(&format!("@expected_index {k}\n"));
        }
        for e in &self.entries {
            out.push_str(&format!("h[{}][{}] = {}\n", e.row + 1, e.col + 1, e.expr));
        }
        out
    }

    fn entry(&self, row: usize, col: usize) -> Option<&Entry> {
        self.entries.iter().find(|e| e.row == row && e.col == col)
    }

    /// Evaluable metric. Does not sample-check.
    pub fn metric(&self) -> DslMetric {
        let n = self.n;
        let mut slots = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                slots.push(match (self.entry(j, k), self.entry(k, j)) {
                    (Some(e), _) => Slot::Direct(Arc::new(e.expr.clone())),
                    (None, Some(e)) => Slot::Mirror(Arc::new(e.expr.clone())),
                    (None, None) => Slot::Zero,
                });
            }
        }
        DslMetric {
            n,
            domain: self.chart.domain(),
            slots,
        }
    }
}

#[derive(Clone, Debug)]
enum Slot {
    Direct(Arc<Expr>),
    Mirror(Arc<Expr>),
    Zero,
}

/// Metric field defined by parsed entries.
#[derive(Clone, Debug)]
pub struct DslMetric {
    n: usize,
    domain: Domain,
    slots: Vec<Slot>,
}

impl HermitianMetricField for DslMetric {
    fn complex_dim(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &[f64]) -> Result<CMatrix> {
        let z = complex_coords(x);
        Ok(CMatrix::from_fn(self.n, self.n, |j, k| match &self.slots[j * self.n + k] {
            Slot::Direct(e) => e.eval(&z),
            Slot::Mirror(e) => e.eval(&z).conj(),
            Slot::Zero => Complex64::new(0.0, 0.0),
        }))
    }

    fn domain(&self) -> Domain {
        self.domain.clone()
    }
}

fn directive(
    file: &mut MetricFile,
    n_given: &mut Option<(usize, usize)>,
    rest: &str,
    line: usize,
    base: usize,
) -> std::result::Result<(), DslError> {
    let err = |col: usize, msg: String, exp: &[&str]| {
        DslError::new(DslErrorKind::Directive, line, col, msg).expecting(exp)
    };
    let rest_trim = rest.trim_start();
    let key_col = base + (rest.len() - rest_trim.len());
    let (key, value) = match rest_trim.split_once(char::is_whitespace) {
        Some((k, v)) => (k, v.trim()),
        None => (rest_trim, ""),
    };
    let value_col = key_col + key.chars().count() + 1;
    const KEYS: [&str; 5] = ["name", "n", "chart", "twist", "expected_index"];
    if !KEYS.contains(&key) {
        return Err(err(key_col, format!("unknown directive `@{key}`"), &KEYS));
    }
    if value.is_empty() {
        return Err(err(value_col, format!("`@{key}` needs a value"), &[]));
    }
    let int = |v: &str| -> std::result::Result<i64, DslError> {
        v.parse()
            .map_err(|_| err(value_col, format!("`{v}` is not an integer"), &["integer"]))
    };
    match key {
        "name" => file.name = Some(value.to_string()),
        "n" => {
            let n = int(value)?;
            if !(1..=crate::exterior::MAX_DIM as i64 / 2).contains(&n) {
                return Err(err(value_col, format!("complex dimension {n} out of range"), &[]));
            }
            *n_given = Some((n as usize, line));
        }
        "chart" => {
            file.chart = value.parse().map_err(|_| {
                err(value_col, format!("unknown chart `{value}`"), &["cp", "hopf", "torus"])
            })?;
        }
        "twist" => file.twist = Some(int(value)?),
        "expected_index" => file.expected_index = Some(int(value)?),
        _ => unreachable!(),
    }
    Ok(())
}

/// Parse the text and check its structure (indices, dimensions, diagonal
/// entries, directives). No numerical checks.
pub fn parse_metric_file(text: &str) -> std::result::Result<MetricFile, DslError> {
    let mut file = MetricFile {
        name: None,
        n: 0,
        chart: ChartKind::Cp,
        twist: None,
        expected_index: None,
        entries: Vec::new(),
    };
    let mut n_given: Option<(usize, usize)> = None;
    let mut uses: Vec<(usize, usize, usize)> = Vec::new();
    let mut twist_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let indent = content.chars().count() - trimmed.chars().count();
        if let Some(rest) = trimmed.strip_prefix('@') {
            if rest.starts_with("twist") {
                twist_line = line;
            }
            directive(&mut file, &mut n_given, rest, line, indent + 2)?;
            continue;
        }
        let toks = Lexer::new(trimmed, line, indent + 1).tokens()?;
        let mut p = Parser::new(toks, line);
        let head_col = p.col();
        match p.peek() {
            Tok::Ident(s) if s == "h" => {
                p.bump();
            }
            _ => return Err(p.unexpected(&["`h[j][k] = expr`", "`@directive`", "comment"])),
        }
        let mut index = || -> std::result::Result<usize, DslError> {
            p.expect_sym('[')?;
            let v = match p.peek() {
                Tok::Int(v) if *v >= 1 => *v as usize,
                _ => return Err(p.unexpected(&["index ≥ 1"])),
            };
            p.bump();
            p.expect_sym(']')?;
            Ok(v)
        };
        let row = index()?;
        let col = index()?;
        p.expect_sym('=')?;
        let expr = p.expr()?;
        p.expect_end()?;
        if let Some(prev) = file.entry(row - 1, col - 1) {
            return Err(DslError::new(
                DslErrorKind::Syntax,
                line,
                head_col,
                format!("h[{row}][{col}] already assigned on line {}", prev.line),
            ));
        }
        uses.push((row.max(col), line, head_col));
        for &(j, c) in &p.vars {
            uses.push((j, line, c));
        }
        file.entries.push(Entry {
            row: row - 1,
            col: col - 1,
            expr,
            line,
        });
    }
    if file.entries.is_empty() {
        return Err(DslError::new(
            DslErrorKind::Syntax,
            text.lines().count().max(1),
            1,
            "no metric entries",
        )
        .expecting(&["`h[j][k] = expr`"]));
    }
    let inferred = uses.iter().map(|u| u.0).max().unwrap_or(1);
    file.n = match n_given {
        Some((n, _)) => {
            if let Some(&(j, line, col)) = uses.iter().find(|u| u.0 > n) {
                return Err(DslError::new(
                    DslErrorKind::Syntax,
                    line,
                    col,
                    format!("index {j} exceeds the declared dimension {n}"),
                ));
            }
            n
        }
        None => inferred,
    };
    if 2 * file.n > crate::exterior::MAX_DIM {
        return Err(DslError::new(
            DslErrorKind::Directive,
            1,
            1,
            format!("complex dimension {} out of range", file.n),
        ));
    }
    for j in 0..file.n {
        if file.entry(j, j).is_none() {
            let line = file.entries.last().map_or(1, |e| e.line);
            return Err(DslError::new(
                DslErrorKind::Hermiticity,
                line,
                1,
                format!("diagonal entry h[{}][{}] is missing", j + 1, j + 1),
            ));
        }
    }
    if file.twist.is_some() && !(file.chart == ChartKind::Cp && file.n == 1) {
        return Err(DslError::new(
            DslErrorKind::Directive,
            twist_line,
            1,
            "a twist is only available on the cp chart with n = 1",
        ));
    }
    Ok(file)
}

/// Parse, then sample [`VALIDATION_POINTS`] chart points for Hermiticity and
/// positive-definiteness.
pub fn parse_metric(text: &str) -> std::result::Result<(MetricFile, DslMetric), DslError> {
    let file = parse_metric_file(text)?;
    let metric = file.metric();
    validate(&file, &metric)?;
    Ok((file, metric))
}

fn validate(file: &MetricFile, metric: &DslMetric) -> std::result::Result<(), DslError> {
    let n = file.n;
    let chart = file.chart.chart(n);
    let mut rng = ChaCha8Rng::seed_from_u64(VALIDATION_SEED);
    let first_line = file.entries.first().map_or(1, |e| e.line);
    for _ in 0..VALIDATION_POINTS {
        let u: Vec<f64> = (0..2 * n).map(|_| rng.random_range(0.05..0.95)).collect();
        let x = chart.point(&u);
        let z = complex_coords(&x);
        let mut scale: f64 = 0.0;
        for e in &file.entries {
            let v = e.expr.eval(&z);
            if !v.is_finite() {
                return Err(DslError::new(
                    DslErrorKind::Evaluation,
                    e.line,
                    1,
                    format!("h[{}][{}] is not finite at z = {}", e.row + 1, e.col + 1, fmt_point(&z)),
                ));
            }
            scale = scale.max(v.norm());
        }
        for e in &file.entries {
            let v = e.expr.eval(&z);
            let mirror = match file.entry(e.col, e.row) {
                Some(m) => m.expr.eval(&z).conj(),
                None if e.row != e.col => continue,
                None => unreachable!("diagonal entries exist"),
            };
            if (v - mirror).norm() > HERMITICITY_TOL * scale.max(f64::MIN_POSITIVE) {
                let what = if e.row == e.col {
                    format!("diagonal entry h[{}][{}] is not real", e.row + 1, e.col + 1)
                } else {
                    format!(
                        "h[{}][{}] is not the conjugate of h[{}][{}]",
                        e.row + 1,
                        e.col + 1,
                        e.col + 1,
                        e.row + 1
                    )
                };
                return Err(DslError::new(
                    DslErrorKind::Hermiticity,
                    e.line,
                    1,
                    format!("{what} at z = {}", fmt_point(&z)),
                ));
            }
        }
        let h = metric.eval(&x).expect("DSL evaluation is total");
        if cholesky(&h, &x).is_err() {
            return Err(DslError::new(
                DslErrorKind::PositiveDefinite,
                first_line,
                1,
                format!("metric is not positive definite at z = {}", fmt_point(&z)),
            ));
        }
    }
    Ok(())
}

fn fmt_point(z: &[Complex64]) -> String {
    let parts: Vec<String> = z.iter().map(|c| format!("{:.4}{:+.4}i", c.re, c.im)).collect();
    format!("({})", parts.join(", "))
}

/// Entries sorted by position, for comparisons that ignore line numbers.
pub fn entry_map(file: &MetricFile) -> BTreeMap<(usize, usize), Expr> {
    file.entries
        .iter()
        .map(|e| ((e.row, e.col), e.expr.clone()))
        .collect()
}
