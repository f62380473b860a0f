//! Local histogram moments and the moment-matched polynomial.
//!
//! The weighted local histogram at a pixel is never built. Its raw moments
//! are spatial convolutions of the powers of the image; stretching the
//! histogram's support `[α, β]` onto `[0, 1]` is a binomial transform of
//! those moments; and on `[0, 1]` the moment-matching system is the Hilbert
//! matrix, whose inverse is known in closed form.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::image::{GrayImage, ParamField, Plane};
use crate::spatial::{power_images, weighted_local_sum, KernelSpec};

/// Largest supported polynomial degree.
pub const MAX_DEGREE: usize = 9;

/// Exact binomial coefficient.
pub fn binomial(n: u32, k: u32) -> i128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * i128::from(n - i) / i128::from(i + 1);
    }
    acc
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::invalid(format!(
            "polynomial degree {degree} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// Raw moments `m_k = (ω ∗ f^k)` of every pixel's weighted histogram.
#[derive(Clone, Debug)]
pub struct MomentStack {
    degree: usize,
    raw: Vec<ParamField>,
}

impl MomentStack {
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Moment plane `m_k`.
    pub fn raw(&self, k: usize) -> &ParamField {
        &self.raw[k]
    }

    pub fn planes(&self) -> &[ParamField] {
        &self.raw
    }

    /// `(m_0, …, m_N)` at one pixel.
    pub fn moments_at(&self, x: usize, y: usize) -> Vec<f64> {
        self.raw.iter().map(|p| p.get(x, y)).collect()
    }

    /// Stretched moments `(μ_0, …, μ_N)` at one pixel for the bounds `[α, β]`.
    pub fn stretched_at(&self, x: usize, y: usize, alpha: f64, beta: f64) -> Result<Vec<f64>> {
        stretch_moments(&self.moments_at(x, y), alpha, beta)
    }

    /// Polynomial coefficients `(c_0, …, c_N)` at one pixel.
    pub fn coefficients_at(&self, x: usize, y: usize, alpha: f64, beta: f64) -> Result<Vec<f64>> {
        let mu = self.stretched_at(x, y, alpha, beta)?;
        fit_coefficients(&mu, hilbert_inverse(self.degree)?)
    }
}

/// Computes `m_0 … m_N` for every pixel. `m_0` is the constant `W`; the
/// others take one convolution each.
pub fn raw_moments(img: &GrayImage, kernel: &KernelSpec, degree: usize) -> Result<MomentStack> {
    check_degree(degree)?;
    let (w, h) = img.dimensions();
    let powers = power_images(img, degree);
    let mut raw = Vec::with_capacity(degree + 1);
    raw.push(Plane::filled(w, h, kernel.total_weight()));
    raw.extend(powers[1..].iter().map(|p| weighted_local_sum(p, kernel)));
    Ok(MomentStack { degree, raw })
}

/// Binomial rows `C(k, r)` for `k ≤ MAX_DEGREE`, as floats.
pub(crate) struct BinomialTable([[f64; MAX_DEGREE + 1]; MAX_DEGREE + 1]);

impl BinomialTable {
    pub(crate) fn get() -> &'static BinomialTable {
        static TABLE: OnceLock<BinomialTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            let mut t = [[0.0; MAX_DEGREE + 1]; MAX_DEGREE + 1];
            for (k, row) in t.iter_mut().enumerate() {
                for (r, v) in row.iter_mut().enumerate().take(k + 1) {
                    *v = binomial(k as u32, r as u32) as f64;
                }
            }
            BinomialTable(t)
        })
    }
}

/// Binomial transform into `out` (same length as `m`, at most
/// `MAX_DEGREE + 1`). The caller guarantees `beta > alpha`.
#[inline]
pub(crate) fn stretch_into(m: &[f64], alpha: f64, beta: f64, table: &BinomialTable, out: &mut [f64]) {
    let inv_range = 1.0 / (beta - alpha);
    let mut neg_alpha_pow = [0.0; MAX_DEGREE + 1];
    neg_alpha_pow[0] = 1.0;
    for j in 1..m.len() {
        neg_alpha_pow[j] = neg_alpha_pow[j - 1] * -alpha;
    }
    let mut scale = 1.0;
    for k in 0..m.len() {
        let row = &table.0[k];
        let mut acc = 0.0;
        for r in 0..=k {
            acc += row[r] * neg_alpha_pow[k - r] * m[r];
        }
        out[k] = acc * scale;
        scale *= inv_range;
    }
}

/// Moments of the histogram after the affine map `t ↦ (t - α) / (β - α)`:
/// `μ_k = (β - α)^{-k} Σ_r C(k, r) (-α)^{k-r} m_r`.
pub fn stretch_moments(m: &[f64], alpha: f64, beta: f64) -> Result<Vec<f64>> {
    if m.is_empty() || m.len() > MAX_DEGREE + 1 {
        return Err(Error::invalid(format!(
            "moment vector length {} outside 1..={}",
            m.len(),
            MAX_DEGREE + 1
        )));
    }
    if !(beta > alpha) {
        return Err(Error::invalid(format!(
            "stretching needs beta > alpha, got [{alpha}, {beta}]"
        )));
    }
    let mut out = vec![0.0; m.len()];
    stretch_into(m, alpha, beta, BinomialTable::get(), &mut out);
    Ok(out)
}

/// Closed-form inverse of the `(N+1) × (N+1)` Hilbert matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HilbertInverse {
    order: usize,
    exact: Vec<i128>,
    entries: Vec<f64>,
}

impl HilbertInverse {
    fn build(degree: usize) -> Self {
        let order = degree + 1;
        let n_big = degree as u32;
        let mut exact = Vec::with_capacity(order * order);
        // One-based indices as in the closed form.
        for m in 1..=order as u32 {
            for n in 1..=order as u32 {
                let sign = if (m + n) % 2 == 0 { 1 } else { -1 };
                let c = binomial(m + n - 2, m - 1);
                exact.push(
                    sign * i128::from(m + n - 1)
                        * binomial(n_big + m, n_big + 1 - n)
                        * binomial(n_big + n, n_big + 1 - m)
                        * c
                        * c,
                );
            }
        }
        let entries = exact.iter().map(|&v| v as f64).collect();
        Self {
            order,
            exact,
            entries,
        }
    }

    /// Matrix size `N + 1`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Zero-based entry as a float.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.order + col]
    }

    /// Zero-based entry as an exact integer.
    pub fn exact(&self, row: usize, col: usize) -> i128 {
        self.exact[row * self.order + col]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// `out = A⁻¹ μ`.
    #[inline]
    pub fn apply_into(&self, mu: &[f64], out: &mut [f64]) {
        for (row, o) in self.entries.chunks_exact(self.order).zip(out.iter_mut()) {
            *o = row.iter().zip(mu).map(|(a, b)| a * b).sum();
        }
    }
}

/// Returns the cached Hilbert inverse for polynomial degree `degree`.
pub fn hilbert_inverse(degree: usize) -> Result<&'static HilbertInverse> {
    check_degree(degree)?;
    static CACHE: [OnceLock<HilbertInverse>; MAX_DEGREE + 1] = [const { OnceLock::new() }; MAX_DEGREE + 1];
    Ok(CACHE[degree].get_or_init(|| HilbertInverse::build(degree)))
}

/// Coefficients `c = A⁻¹ μ` of the polynomial on `[0, 1]` whose first
/// `N + 1` moments equal `μ`.
pub fn fit_coefficients(mu: &[f64], ainv: &HilbertInverse) -> Result<Vec<f64>> {
    if mu.len() != ainv.order() {
        return Err(Error::invalid(format!(
            "moment vector has length {}, Hilbert inverse has order {}",
            mu.len(),
            ainv.order()
        )));
    }
    let mut c = vec![0.0; mu.len()];
    ainv.apply_into(mu, &mut c);
    Ok(c)
}

/// `∫₀¹ t^k p(t) dt` for `p(t) = Σ c_n t^n`, i.e. `Σ_n c_n / (k + n + 1)`.
pub fn polynomial_moment(c: &[f64], k: usize) -> f64 {
    c.iter()
        .enumerate()
        .map(|(n, &cn)| cn / (k + n + 1) as f64)
        .sum()
}
