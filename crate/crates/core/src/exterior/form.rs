use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative pruning threshold applied per degree after products.
pub const PRUNE_REL: f64 = 1e-14;

/// Largest supported ambient real dimension.
pub const MAX_DIM: usize = 12;

/// Pointwise inhomogeneous differential form on `R^dim`.
///
/// Components are indexed by strictly increasing index tuples. Internally a
/// tuple `(i_1 < … < i_p)` is stored as the bitmask `Σ 2^{i_k}`; indices are
/// 0-based, so `dx¹` of the usual notation is index 0.
#[derive(Clone, PartialEq)]
pub struct PolyForm {
    dim: usize,
    coeffs: Vec<Complex64>,
}

#[inline]
pub(crate) fn indices_of(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|i| mask & (1 << i) != 0).collect()
}

/// Sign of `e_a ∧ e_b` relative to the canonically ordered `e_{a|b}`.
#[inline]
pub(crate) fn wedge_sign(a: usize, b: usize) -> f64 {
    // Count inversions: pairs (i in a, j in b) with i > j.
    let mut inv = 0u32;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        inv += (a >> (j + 1)).count_ones();
        rest &= rest - 1;
    }
    if inv.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

impl PolyForm {
    pub fn zero(dim: usize) -> Self {
        assert!(dim <= MAX_DIM, "ambient dimension {dim} exceeds {MAX_DIM}");
        Self {
            dim,
            coeffs: vec![Complex64::new(0.0, 0.0); 1 << dim],
        }
    }

    pub fn scalar(dim: usize, c: Complex64) -> Self {
        let mut f = Self::zero(dim);
        f.coeffs[0] = c;
        f
    }

    pub fn one(dim: usize) -> Self {
        Self::scalar(dim, Complex64::new(1.0, 0.0))
    }

    /// `c · dx^{i_1} ∧ … ∧ dx^{i_p}` for an arbitrary (not necessarily sorted)
    /// index list; repeated indices give the zero form.
    pub fn monomial(dim: usize, indices: &[usize], c: Complex64) -> Self {
        let mut f = Self::zero(dim);
        f.add_monomial(indices, c);
        f
    }

    /// The 1-form `Σ_M a_M dx^M`.
    pub fn one_form(a: &[Complex64]) -> Self {
        let mut f = Self::zero(a.len());
        for (m, &c) in a.iter().enumerate() {
            f.coeffs[1 << m] = c;
        }
        f
    }

    /// The 2-form `½ F_{MN} dx^M ∧ dx^N` from a row-major `dim × dim` array.
    /// Only the antisymmetric part of `f` contributes.
    pub fn two_form(dim: usize, f: &[Complex64]) -> Self {
        let mut out = Self::zero(dim);
        for m in 0..dim {
            for n in (m + 1)..dim {
                out.coeffs[(1 << m) | (1 << n)] = (f[m * dim + n] - f[n * dim + m]) * 0.5;
            }
        }
        out
    }

    /// Accumulate `c · dx^{i_1} ∧ … ∧ dx^{i_p}` with the sign of the sorting
    /// permutation.
    pub fn add_monomial(&mut self, indices: &[usize], c: Complex64) {
        let mut mask = 0usize;
        let mut sign = 1.0;
        for &i in indices {
            assert!(i < self.dim, "index {i} out of range for dimension {}", self.dim);
            let bit = 1 << i;
            if mask & bit != 0 {
                return;
            }
            sign *= wedge_sign(mask, bit);
            mask |= bit;
        }
        self.coeffs[mask] += c * sign;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Complex dimension `n` of a `2n`-dimensional ambient space.
    pub fn complex_dim(&self) -> usize {
        self.dim / 2
    }

    /// Coefficient of `dx^{i_1} ∧ … ∧ dx^{i_p}` for any ordering of the indices.
    pub fn coefficient(&self, indices: &[usize]) -> Complex64 {
        let mut mask = 0usize;
        let mut sign = 1.0;
        for &i in indices {
            let bit = 1 << i;
            if i >= self.dim || mask & bit != 0 {
                return Complex64::new(0.0, 0.0);
            }
            sign *= wedge_sign(mask, bit);
            mask |= bit;
        }
        self.coeffs[mask] * sign
    }

    /// Coefficient of the monomial whose indices are the set bits of `mask`.
    pub fn coeff_by_mask(&self, mask: usize) -> Complex64 {
        self.coeffs[mask]
    }

    pub fn coeff_by_mask_mut(&mut self, mask: usize) -> &mut Complex64 {
        &mut self.coeffs[mask]
    }

    /// Dense coefficient table indexed by bitmask.
    pub fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Nonzero components as `(strictly increasing 0-based tuple, coefficient)`.
    pub fn components(&self) -> impl Iterator<Item = (Vec<usize>, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() != 0.0)
            .map(|(m, &c)| (indices_of(m), c))
    }

    /// Homogeneous degree-`p` part.
    pub fn degree_part(&self, p: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (m, c) in self.coeffs.iter().enumerate() {
            if m.count_ones() as usize == p {
                out.coeffs[m] = *c;
            }
        }
        out
    }

    /// Degrees carrying at least one nonzero coefficient.
    pub fn degrees(&self) -> Vec<usize> {
        let mut present = vec![false; self.dim + 1];
        for (m, c) in self.coeffs.iter().enumerate() {
            if c.norm_sqr() != 0.0 {
                present[m.count_ones() as usize] = true;
            }
        }
        present
            .iter()
            .enumerate()
            .filter_map(|(p, &b)| b.then_some(p))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }

    /// Lowest odd degree present, if any.
    pub fn odd_degree(&self) -> Option<usize> {
        self.degrees().into_iter().find(|p| p % 2 == 1)
    }

    pub fn scalar_part(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Coefficient of `dx^0 ∧ … ∧ dx^{dim-1}`.
    pub fn top_component(&self) -> Complex64 {
        self.coeffs[(1 << self.dim) - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude within each degree.
    fn degree_scales(&self) -> Vec<f64> {
        let mut scale = vec![0.0f64; self.dim + 1];
        for (m, c) in self.coeffs.iter().enumerate() {
            let p = m.count_ones() as usize;
            scale[p] = scale[p].max(c.norm());
        }
        scale
    }

    /// Zero every coefficient smaller than `rel` times the largest coefficient
    /// of the same degree.
    pub fn prune(&mut self, rel: f64) {
        let scale = self.degree_scales();
        for (m, c) in self.coeffs.iter_mut().enumerate() {
            if c.norm() <= rel * scale[m.count_ones() as usize] {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn scale_real(&self, a: f64) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * a).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn real_part(&self) -> Self {
        Self {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| Complex64::new(c.re, 0.0)).collect(),
        }
    }

    /// Wedge product with the graded sign from the index permutation.
    pub fn wedge(&self, other: &PolyForm) -> Result<PolyForm> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut out = self.wedge_unpruned(other);
        out.prune(PRUNE_REL);
        Ok(out)
    }

    pub(crate) fn wedge_unpruned(&self, other: &PolyForm) -> PolyForm {
        let full = (1usize << self.dim) - 1;
        let mut out = PolyForm::zero(self.dim);
        let rhs: Vec<(usize, Complex64)> = other
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() != 0.0)
            .map(|(m, &c)| (m, c))
            .collect();
        for (a, ca) in self.coeffs.iter().enumerate() {
            if ca.norm_sqr() == 0.0 {
                continue;
            }
            let free = full & !a;
            for &(b, cb) in &rhs {
                if b & free == b {
                    out.coeffs[a | b] += ca * cb * wedge_sign(a, b);
                }
            }
        }
        out
    }

    /// Approximate equality: every coefficient within `tol` absolutely.
    pub fn approx_eq(&self, other: &PolyForm, tol: f64) -> bool {
        self.dim == other.dim
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Largest coefficient difference between two forms of equal dimension.
    pub fn max_diff(&self, other: &PolyForm) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for PolyForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PolyForm(dim={}; ", self.dim)?;
        let mut first = true;
        for (idx, c) in self.components() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6e}{:+.6e}i){:?}", c.re, c.im, idx)?;
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, ")")
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&PolyForm> for &PolyForm {
            type Output = PolyForm;
            fn $method(self, rhs: &PolyForm) -> PolyForm {
                assert_eq!(self.dim, rhs.dim, "dimension mismatch");
                PolyForm {
                    dim: self.dim,
                    coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $tr<PolyForm> for PolyForm {
            type Output = PolyForm;
            fn $method(self, rhs: PolyForm) -> PolyForm {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&PolyForm> for PolyForm {
            type Output = PolyForm;
            fn $method(self, rhs: &PolyForm) -> PolyForm {
                (&self).$method(rhs)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);

impl AddAssign<&PolyForm> for PolyForm {
    fn add_assign(&mut self, rhs: &PolyForm) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&PolyForm> for PolyForm {
    fn sub_assign(&mut self, rhs: &PolyForm) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &PolyForm {
    type Output = PolyForm;
    fn neg(self) -> PolyForm {
        self.scale_real(-1.0)
    }
}

impl Neg for PolyForm {
    type Output = PolyForm;
    fn neg(self) -> PolyForm {
        self.scale_real(-1.0)
    }
}

impl Mul<Complex64> for &PolyForm {
    type Output = PolyForm;
    fn mul(self, rhs: Complex64) -> PolyForm {
        self.scale(rhs)
    }
}

impl Mul<f64> for &PolyForm {
    type Output = PolyForm;
    fn mul(self, rhs: f64) -> PolyForm {
        self.scale_real(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_wedge_and_antisymmetry() {
        let dx1 = PolyForm::monomial(2, &[0], c(1.0));
        let dx2 = PolyForm::monomial(2, &[1], c(1.0));
        let a = dx1.wedge(&dx2).unwrap();
        assert_eq!(a.coefficient(&[0, 1]), c(1.0));
        let b = dx2.wedge(&dx1).unwrap();
        assert_eq!(b.coefficient(&[0, 1]), c(-1.0));
        assert_eq!(b.coefficient(&[1, 0]), c(1.0));
    }

    #[test]
    fn repeated_index_vanishes() {
        let a = PolyForm::monomial(3, &[0, 1], c(1.0));
        let b = PolyForm::monomial(3, &[0, 2], c(1.0));
        assert!(a.wedge(&b).unwrap().is_zero());
        assert!(PolyForm::monomial(3, &[2, 2], c(1.0)).is_zero());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = PolyForm::one(2);
        let b = PolyForm::one(4);
        assert_eq!(
            a.wedge(&b),
            Err(Error::DimensionMismatch { left: 2, right: 4 })
        );
    }

    #[test]
    fn top_component_examples() {
        assert_eq!(PolyForm::one(2).top_component(), c(0.0));
        assert_eq!(PolyForm::monomial(2, &[0, 1], c(5.0)).top_component(), c(5.0));
        assert_eq!(PolyForm::monomial(2, &[1, 0], c(1.0)).top_component(), c(-1.0));
    }

    #[test]
    fn degree_part_keeps_only_that_degree() {
        let mut f = PolyForm::one(4);
        f.add_monomial(&[0], c(2.0));
        f.add_monomial(&[1, 3], c(3.0));
        f.add_monomial(&[0, 2], c(-1.0));
        let two = f.degree_part(2);
        assert_eq!(two.degrees(), vec![2]);
        assert_eq!(two.components().count(), 2);
    }

    #[test]
    fn two_form_from_antisymmetric_array() {
        // F_{01} = 3, F_{10} = -3 -> 3 dx0^dx1
        let mut f = vec![c(0.0); 4];
        f[1] = c(3.0);
        f[2] = c(-3.0);
        let w = PolyForm::two_form(2, &f);
        assert_eq!(w.coefficient(&[0, 1]), c(3.0));
    }

    #[test]
    fn pruning_is_relative_per_degree() {
        let mut f = PolyForm::one(2);
        f.add_monomial(&[0, 1], c(1e-20));
        f.add_monomial(&[0], c(1.0));
        f.add_monomial(&[1], c(1e-16));
        f.prune(PRUNE_REL);
        assert_eq!(f.coefficient(&[0, 1]), c(1e-20));
        assert_eq!(f.coefficient(&[1]), c(0.0));
    }
}
