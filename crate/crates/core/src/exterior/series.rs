use crate::error::{Error, Result};

/// Truncated formal power series `Σ_{k≤K} c_k x^k` with real coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarSeries {
    coeffs: Vec<f64>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl ScalarSeries {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least c_0");
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest retained power `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, 0.0);
        Self { coeffs: c }
    }

    pub fn one_plus_x() -> Self {
        Self::new(vec![1.0, 1.0])
    }

    /// `sin(x)/x` through `x^order`.
    pub fn sin_over_x(order: usize) -> Self {
        let coeffs = (0..=order)
            .map(|k| {
                if k % 2 == 1 {
                    0.0
                } else {
                    let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
                    sign / factorial(k + 1)
                }
            })
            .collect();
        Self::new(coeffs)
    }

    /// Todd generating function `x/(1-e^{-x})` through `x^order`, obtained as
    /// the reciprocal of `(1-e^{-x})/x = Σ (-1)^k x^k/(k+1)!`.
    pub fn todd(order: usize) -> Self {
        let denom = Self::new(
            (0..=order)
                .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / factorial(k + 1))
                .collect(),
        );
        denom.recip().expect("leading coefficient is 1")
    }

    /// Product truncated to the shorter order.
    pub fn mul(&self, other: &ScalarSeries) -> ScalarSeries {
        let k = self.order().min(other.order());
        let mut out = vec![0.0; k + 1];
        for (i, a) in self.coeffs.iter().take(k + 1).enumerate() {
            for (j, b) in other.coeffs.iter().take(k + 1 - i).enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn recip(&self) -> Result<ScalarSeries> {
        let c0 = self.coeffs[0];
        if c0 == 0.0 {
            return Err(Error::SeriesNotUnital(c0));
        }
        let k = self.order();
        let mut out = vec![0.0; k + 1];
        out[0] = 1.0 / c0;
        for m in 1..=k {
            let s: f64 = (1..=m).map(|j| self.coeffs[j] * out[m - j]).sum();
            out[m] = -s / c0;
        }
        Ok(Self::new(out))
    }

    fn derivative(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect()
    }

    /// `log s` for a series with `s(0) = 1`, via `(log s)' = s'/s`.
    pub fn log(&self) -> Result<ScalarSeries> {
        if (self.coeffs[0] - 1.0).abs() > 1e-15 {
            return Err(Error::SeriesNotUnital(self.coeffs[0]));
        }
        let k = self.order();
        let ds = self.derivative();
        let inv = self.recip()?;
        let mut q = vec![0.0; k];
        for (i, a) in ds.iter().enumerate() {
            for (j, b) in inv.coeffs.iter().take(k - i).enumerate() {
                q[i + j] += a * b;
            }
        }
        let mut out = vec![0.0; k + 1];
        for (m, v) in q.iter().enumerate() {
            out[m + 1] = v / (m + 1) as f64;
        }
        Ok(Self::new(out))
    }

    /// `exp s` for a series with `s(0) = 0`, via `e' = s' e`.
    pub fn exp(&self) -> Result<ScalarSeries> {
        if self.coeffs[0] != 0.0 {
            return Err(Error::SeriesNotUnital(self.coeffs[0]));
        }
        let k = self.order();
        let ds = self.derivative();
        let mut out = vec![0.0; k + 1];
        out[0] = 1.0;
        for m in 1..=k {
            let s: f64 = (0..m).map(|j| ds[j] * out[m - 1 - j]).sum();
            out[m] = s / m as f64;
        }
        Ok(Self::new(out))
    }

    /// `s(c·x)`.
    pub fn rescale(&self, c: f64) -> ScalarSeries {
        let mut p = 1.0;
        Self::new(
            self.coeffs
                .iter()
                .map(|a| {
                    let v = a * p;
                    p *= c;
                    v
                })
                .collect(),
        )
    }
}
