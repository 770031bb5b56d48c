use num_complex::Complex64;

use super::form::{PolyForm, PRUNE_REL};
use super::series::ScalarSeries;
use crate::error::{Error, Result};

/// Degree-0 parts below this magnitude count as nilpotent.
pub const NILPOTENT_TOL: f64 = 1e-12;

/// Square matrix whose entries are forms on a common ambient space.
///
/// Curvature matrices hold 2-forms (even, pairwise commuting entries);
/// connection matrices hold 1-forms. Operations that need commuting entries
/// check evenness themselves.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPolyForm {
    size: usize,
    dim: usize,
    entries: Vec<PolyForm>,
}

impl MatrixPolyForm {
    pub fn zero(size: usize, dim: usize) -> Self {
        Self {
            size,
            dim,
            entries: vec![PolyForm::zero(dim); size * size],
        }
    }

    pub fn from_entries(size: usize, entries: Vec<PolyForm>) -> Result<Self> {
        assert_eq!(entries.len(), size * size, "need size^2 entries");
        let dim = entries.first().map(PolyForm::dim).unwrap_or(0);
        if let Some(bad) = entries.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                left: dim,
                right: bad.dim(),
            });
        }
        Ok(Self { size, dim, entries })
    }

    /// Matrix of 2-forms `½ R_{MN}{}^{A}{}_{B} dx^M ∧ dx^N` from components laid
    /// out as `comps[((m * dim + n) * size + a) * size + b]`.
    pub fn from_two_form_components(size: usize, dim: usize, comps: &[f64]) -> Self {
        assert_eq!(comps.len(), dim * dim * size * size);
        let mut entries = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                let mut f = PolyForm::zero(dim);
                for m in 0..dim {
                    for n in (m + 1)..dim {
                        let v = 0.5
                            * (comps[((m * dim + n) * size + a) * size + b]
                                - comps[((n * dim + m) * size + a) * size + b]);
                        *f.coeff_by_mask_mut((1 << m) | (1 << n)) = Complex64::new(v, 0.0);
                    }
                }
                entries.push(f);
            }
        }
        Self { size, dim, entries }
    }

    /// Matrix of 1-forms `Ω_{M,A}{}^B dx^M` from `comps[(m * size + a) * size + b]`.
    pub fn from_one_form_components(size: usize, dim: usize, comps: &[f64]) -> Self {
        assert_eq!(comps.len(), dim * size * size);
        let mut entries = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                let mut f = PolyForm::zero(dim);
                for m in 0..dim {
                    *f.coeff_by_mask_mut(1 << m) =
                        Complex64::new(comps[(m * size + a) * size + b], 0.0);
                }
                entries.push(f);
            }
        }
        Self { size, dim, entries }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, a: usize, b: usize) -> &PolyForm {
        &self.entries[a * self.size + b]
    }

    pub fn entry_mut(&mut self, a: usize, b: usize) -> &mut PolyForm {
        &mut self.entries[a * self.size + b]
    }

    pub fn entries(&self) -> &[PolyForm] {
        &self.entries
    }

    pub fn is_even(&self) -> bool {
        self.entries.iter().all(|e| e.odd_degree().is_none())
    }

    /// Largest |degree-0 coefficient| over all entries.
    pub fn degree0_magnitude(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.scalar_part().norm())
            .fold(0.0, f64::max)
    }

    /// Entry-wise wedge matrix product `(AB)_{ij} = Σ_k A_{ik} ∧ B_{kj}`.
    pub fn wedge(&self, other: &MatrixPolyForm) -> Result<MatrixPolyForm> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        assert_eq!(self.size, other.size, "matrix size mismatch");
        let k = self.size;
        let mut out = MatrixPolyForm::zero(k, self.dim);
        for i in 0..k {
            for j in 0..k {
                let mut acc = PolyForm::zero(self.dim);
                for l in 0..k {
                    let a = self.entry(i, l);
                    let b = other.entry(l, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc += &a.wedge_unpruned(b);
                }
                acc.prune(PRUNE_REL);
                *out.entry_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    pub fn trace(&self) -> PolyForm {
        let mut acc = PolyForm::zero(self.dim);
        for i in 0..self.size {
            acc += self.entry(i, i);
        }
        acc
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            size: self.size,
            dim: self.dim,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &MatrixPolyForm) -> Self {
        assert_eq!((self.size, self.dim), (other.size, other.dim));
        Self {
            size: self.size,
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &MatrixPolyForm) -> Self {
        assert_eq!((self.size, self.dim), (other.size, other.dim));
        Self {
            size: self.size,
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(PolyForm::max_abs).fold(0.0, f64::max)
    }

    /// Conjugate by a constant complex matrix: `U M U^{-1}` given both factors
    /// (row-major `size × size`).
    pub fn conjugate_by(&self, u: &[Complex64], u_inv: &[Complex64]) -> Self {
        let k = self.size;
        let mut out = MatrixPolyForm::zero(k, self.dim);
        for i in 0..k {
            for j in 0..k {
                let mut acc = PolyForm::zero(self.dim);
                for a in 0..k {
                    for b in 0..k {
                        let c = u[i * k + a] * u_inv[b * k + j];
                        if c.norm_sqr() == 0.0 {
                            continue;
                        }
                        acc += &self.entry(a, b).scale(c);
                    }
                }
                *out.entry_mut(i, j) = acc;
            }
        }
        out
    }
}

/// `Σ_{k≤n} f^{∧k}/k!` for an even form, truncated at the top degree; a
/// degree-0 part enters as the scalar factor `e^{f_0}`.
pub fn exp_even(f: &PolyForm) -> Result<PolyForm> {
    if let Some(degree) = f.odd_degree() {
        return Err(Error::OddDegree { degree });
    }
    let dim = f.dim();
    let f0 = f.scalar_part();
    let mut nil = f.clone();
    *nil.coeff_by_mask_mut(0) = Complex64::new(0.0, 0.0);
    let mut out = PolyForm::one(dim);
    let mut term = PolyForm::one(dim);
    for k in 1..=dim / 2 {
        term = term.wedge_unpruned(&nil).scale_real(1.0 / k as f64);
        if term.is_zero() {
            break;
        }
        out += &term;
    }
    let mut out = out.scale(f0.exp());
    out.prune(PRUNE_REL);
    Ok(out)
}

/// `det s(M) = exp(Σ_k (log s)_k tr M^k)` for a nilpotent matrix of even forms.
pub fn trlog_apply(m: &MatrixPolyForm, s: &ScalarSeries) -> Result<PolyForm> {
    if let Some(e) = m.entries().iter().find_map(|e| e.odd_degree()) {
        return Err(Error::OddDegree { degree: e });
    }
    let mag = m.degree0_magnitude();
    if mag > NILPOTENT_TOL {
        return Err(Error::NotNilpotent { magnitude: mag });
    }
    let n = m.dim() / 2;
    if s.coeffs().len() < n + 1 {
        return Err(Error::SeriesTooShort {
            have: s.coeffs().len(),
            need: n + 1,
        });
    }
    let log_s = s.truncate(n).log()?;
    let mut sum = PolyForm::zero(m.dim());
    let mut power = m.clone();
    for k in 1..=n {
        if k > 1 {
            power = power.wedge(m)?;
        }
        let lk = log_s.coeffs()[k];
        if lk != 0.0 {
            sum += &power.trace().scale_real(lk);
        }
    }
    exp_even(&sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn exp_of_zero_is_one() {
        let e = exp_even(&PolyForm::zero(4)).unwrap();
        assert_eq!(e, PolyForm::one(4));
    }

    #[test]
    fn exp_nilpotent_at_n1() {
        let f = PolyForm::monomial(2, &[0, 1], c(2.5));
        let e = exp_even(&f).unwrap();
        assert_eq!(e, &PolyForm::one(2) + &f);
    }

    #[test]
    fn exp_of_two_symplectic_blocks() {
        // f = e01 + e23: e^f = 1 + f + e0123 (f^2/2 = e0123)
        let mut f = PolyForm::monomial(4, &[0, 1], c(1.0));
        f.add_monomial(&[2, 3], c(1.0));
        let e = exp_even(&f).unwrap();
        // brute-force oracle: sum of wedge powers
        let f2 = f.wedge(&f).unwrap();
        let expect = &(&PolyForm::one(4) + &f) + &f2.scale_real(0.5);
        assert!(e.approx_eq(&expect, 1e-15));
        assert_eq!(e.coefficient(&[0, 1, 2, 3]), c(1.0));
    }

    #[test]
    fn exp_rejects_odd_input() {
        let f = PolyForm::monomial(2, &[0], c(1.0));
        assert_eq!(exp_even(&f), Err(Error::OddDegree { degree: 1 }));
    }

    #[test]
    fn trlog_of_zero_matrix_is_one() {
        let m = MatrixPolyForm::zero(2, 4);
        let r = trlog_apply(&m, &ScalarSeries::todd(4)).unwrap();
        assert_eq!(r, PolyForm::one(4));
    }

    #[test]
    fn trlog_one_plus_x_single_entry() {
        let f = PolyForm::monomial(2, &[0, 1], c(0.7));
        let m = MatrixPolyForm::from_entries(1, vec![f.clone()]).unwrap();
        let r = trlog_apply(&m, &ScalarSeries::one_plus_x()).unwrap();
        assert!(r.approx_eq(&(&PolyForm::one(2) + &f), 1e-15));
    }

    #[test]
    fn trlog_rejects_scalar_part() {
        let m = MatrixPolyForm::from_entries(1, vec![PolyForm::one(2)]).unwrap();
        assert!(matches!(
            trlog_apply(&m, &ScalarSeries::todd(3)),
            Err(Error::NotNilpotent { .. })
        ));
    }

    #[test]
    fn trlog_rejects_short_series() {
        let m = MatrixPolyForm::zero(2, 4);
        assert_eq!(
            trlog_apply(&m, &ScalarSeries::one_plus_x()),
            Err(Error::SeriesTooShort { have: 2, need: 3 })
        );
    }

    #[test]
    fn trlog_todd_on_diagonal_matches_product() {
        // M = diag(a, b) with 2-forms a, b in 4 real dimensions:
        // Td = (1 + a/2 + a^2/12)(1 + b/2 + b^2/12) truncated.
        let mut a = PolyForm::monomial(4, &[0, 1], c(0.8));
        a.add_monomial(&[2, 3], c(-0.3));
        a.add_monomial(&[0, 3], c(0.4));
        let mut b = PolyForm::monomial(4, &[1, 2], c(1.1));
        b.add_monomial(&[0, 1], c(0.2));
        let mut m = MatrixPolyForm::zero(2, 4);
        *m.entry_mut(0, 0) = a.clone();
        *m.entry_mut(1, 1) = b.clone();
        let td = trlog_apply(&m, &ScalarSeries::todd(4)).unwrap();
        let factor = |x: &PolyForm| {
            let x2 = x.wedge(x).unwrap();
            &(&PolyForm::one(4) + &x.scale_real(0.5)) + &x2.scale_real(1.0 / 12.0)
        };
        let expect = factor(&a).wedge(&factor(&b)).unwrap();
        assert!(td.approx_eq(&expect, 1e-14), "{td:?}\n{expect:?}");
    }

    #[test]
    fn wedge_product_of_matrices_is_associative_on_examples() {
        let e = |i: &[usize], v: f64| PolyForm::monomial(6, i, c(v));
        let mut a = MatrixPolyForm::zero(2, 6);
        *a.entry_mut(0, 1) = e(&[0, 1], 1.0);
        *a.entry_mut(1, 0) = e(&[2, 3], 2.0);
        let mut b = MatrixPolyForm::zero(2, 6);
        *b.entry_mut(0, 0) = e(&[4, 5], 1.5);
        *b.entry_mut(1, 1) = e(&[0, 5], -1.0);
        let l = a.wedge(&b).unwrap().wedge(&a).unwrap();
        let r = a.wedge(&b.wedge(&a).unwrap()).unwrap();
        assert_eq!(l, r);
    }
}
