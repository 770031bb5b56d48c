//! 32-bit Sobol sequence with Joe–Kuo direction numbers and random digital
//! shifts.

use crate::error::{Error, Result};

const BITS: usize = 32;

/// `(s, a, m_1 … m_s)` for dimensions 2–8 (dimension 1 uses `m_i = 1`).
const JOE_KUO: [(u32, u32, &[u32]); 7] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
];

pub const MAX_DIM: usize = JOE_KUO.len() + 1;

#[derive(Clone, Debug)]
pub struct Sobol {
    dim: usize,
    /// `v[k][i]`: direction number `i` of dimension `k`.
    v: Vec<[u32; BITS]>,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidQuadrature(format!(
                "Sobol sequence supports 1 to {MAX_DIM} dimensions, got {dim}"
            )));
        }
        let mut v = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (i, w) in first.iter_mut().enumerate() {
            *w = 1 << (BITS - 1 - i);
        }
        v.push(first);
        for &(s, a, m) in JOE_KUO.iter().take(dim - 1) {
            let s = s as usize;
            let mut w = [0u32; BITS];
            for i in 0..BITS {
                w[i] = if i < s {
                    m[i] << (BITS - 1 - i)
                } else {
                    let mut x = w[i - s] ^ (w[i - s] >> s);
                    for k in 1..s {
                        if (a >> (s - 1 - k)) & 1 == 1 {
                            x ^= w[i - k];
                        }
                    }
                    x
                };
            }
            v.push(w);
        }
        Ok(Self { dim, v })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Integer coordinates of point `index` (Gray-code order).
    pub fn raw_point(&self, index: u64) -> Vec<u32> {
        let gray = index ^ (index >> 1);
        self.v
            .iter()
            .map(|w| {
                (0..BITS)
                    .filter(|&i| (gray >> i) & 1 == 1)
                    .fold(0u32, |acc, i| acc ^ w[i])
            })
            .collect()
    }

    /// Iterator over points `start..start+count` with XOR shift `shift`,
    /// mapped to the open unit cube.
    pub fn points(&self, start: u64, count: u64, shift: &[u32]) -> SobolIter<'_> {
        SobolIter {
            sobol: self,
            next: start,
            end: start + count,
            state: self.raw_point(start),
            shift: shift.to_vec(),
        }
    }
}

pub struct SobolIter<'a> {
    sobol: &'a Sobol,
    next: u64,
    end: u64,
    state: Vec<u32>,
    shift: Vec<u32>,
}

impl Iterator for SobolIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.next >= self.end {
            return None;
        }
        let out = self
            .state
            .iter()
            .zip(&self.shift)
            .map(|(&x, &s)| ((x ^ s) as f64 + 0.5) * (1.0 / 4_294_967_296.0))
            .collect();
        // Gray code: point n+1 differs from point n in the bit at ctz(n+1).
        let c = (self.next + 1).trailing_zeros() as usize;
        if c < BITS {
            for (x, w) in self.state.iter_mut().zip(&self.sobol.v) {
                *x ^= w[c];
            }
        }
        self.next += 1;
        Some(out)
    }
}
