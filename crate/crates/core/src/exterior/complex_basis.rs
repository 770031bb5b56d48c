//! Change of basis between `(dx_j, dy_j)` and `(dz_j, dz̄_j)`.
//!
//! Both bases use the pair layout `2j, 2j+1`. In the complex basis index
//! `2j` is `dz_j` and `2j+1` is `dz̄_j`. The transformation is block diagonal
//! over pairs, so a monomial maps to the ordered product of its pair images.

use num_complex::Complex64;

use super::form::PolyForm;

type Pair = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn transform_pairs(f: &PolyForm, t: &Pair) -> PolyForm {
    let dim = f.dim();
    assert!(dim.is_multiple_of(2), "complex basis needs even dimension");
    let n = dim / 2;
    // Image of the four pair monomials {1, e0, e1, e0^e1} in the new pair basis.
    let det = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    let one = Complex64::new(1.0, 0.0);
    let images: [[Complex64; 4]; 4] = [
        [one, ZERO, ZERO, ZERO],
        [ZERO, t[0][0], t[0][1], ZERO],
        [ZERO, t[1][0], t[1][1], ZERO],
        [ZERO, ZERO, ZERO, det],
    ];
    let mut out = PolyForm::zero(dim);
    for (mask, &c) in f.raw().iter().enumerate() {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        // Expand the product over pairs.
        let mut terms: Vec<(usize, Complex64)> = vec![(0, c)];
        for j in 0..n {
            let local = (mask >> (2 * j)) & 3;
            let row = &images[local];
            let mut next = Vec::with_capacity(terms.len() * 2);
            for &(m, v) in &terms {
                for (target, &w) in row.iter().enumerate() {
                    if w.norm_sqr() != 0.0 {
                        next.push((m | (target << (2 * j)), v * w));
                    }
                }
            }
            terms = next;
        }
        for (m, v) in terms {
            *out.coeff_by_mask_mut(m) += v;
        }
    }
    out
}

/// Re-express a real-basis form in the `(dz, dz̄)` basis.
pub fn to_complex_basis(f: &PolyForm) -> PolyForm {
    let half = Complex64::new(0.5, 0.0);
    let ihalf = Complex64::new(0.0, 0.5);
    // dx = (dz + dz̄)/2, dy = (-i dz + i dz̄)/2
    transform_pairs(f, &[[half, half], [-ihalf, ihalf]])
}

/// Inverse of [`to_complex_basis`].
pub fn from_complex_basis(f: &PolyForm) -> PolyForm {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    // dz = dx + i dy, dz̄ = dx - i dy
    transform_pairs(f, &[[one, i], [one, -i]])
}

/// Numbers of holomorphic and antiholomorphic indices of a complex-basis mask.
pub fn bidegree(mask: usize) -> (usize, usize) {
    let holo = (mask & 0x5555_5555).count_ones() as usize;
    let anti = (mask & 0xAAAA_AAAA).count_ones() as usize;
    (holo, anti)
}

/// Type-`(p,q)` part of a real-basis form, returned in the real basis.
pub fn type_part(f: &PolyForm, p: usize, q: usize) -> PolyForm {
    let mut cf = to_complex_basis(f);
    for mask in 0..(1usize << f.dim()) {
        if bidegree(mask) != (p, q) {
            *cf.coeff_by_mask_mut(mask) = ZERO;
        }
    }
    from_complex_basis(&cf)
}

/// Largest coefficient of the part not of type `(p, 0)` for any `p`.
pub fn antiholomorphic_magnitude(f: &PolyForm) -> f64 {
    let cf = to_complex_basis(f);
    (0..(1usize << f.dim()))
        .filter(|&m| bidegree(m).1 > 0)
        .map(|m| cf.coeff_by_mask(m).norm())
        .fold(0.0, f64::max)
}

/// `dz_j` as a real-basis 1-form.
pub fn dz(dim: usize, j: usize) -> PolyForm {
    let mut f = PolyForm::zero(dim);
    f.add_monomial(&[2 * j], Complex64::new(1.0, 0.0));
    f.add_monomial(&[2 * j + 1], Complex64::new(0.0, 1.0));
    f
}

/// `dz̄_j` as a real-basis 1-form.
pub fn dzbar(dim: usize, j: usize) -> PolyForm {
    dz(dim, j).conj()
}
