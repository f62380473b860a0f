//! Gaussian-weighted monomial integrals on the unit interval,
//! `I_k = ∫₀¹ t^k exp(-λ (t - t₀)²) dt`.
//!
//! `I_0` takes two error-function evaluations and `I_1` two exponentials;
//! every higher `I_k` comes from the integration-by-parts identity
//!
//! ```text
//! 2λ I_k = 2λ t₀ I_{k-1} + (k - 1) I_{k-2} - exp(-λ (1 - t₀)²)
//! ```
//!
//! which reuses the exponential already needed for `I_1`. Run upward the
//! identity amplifies rounding by roughly `(k - 1) / 2λ` per step, so for
//! `λ < 1` it is run downward instead, from an index high enough that the
//! unknown starting values have been damped away. For `t₀ < 0` with a
//! concentrated kernel the wanted solution is the recessive one, so the
//! upward run is swamped there too; that case runs downward from an
//! arbitrary start and is normalised to `I_0`.

use crate::error::{Error, Result};
use crate::moments::MAX_DEGREE;

/// Below this `λ` the kernel is flat on `[0, 1]` to double precision and
/// `I_k = 1 / (k + 1)`.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// `λ` below which the recursion runs downward.
pub const DOWNWARD_BELOW: f64 = 1.0;

/// Longest vector the filter needs: `I_0 … I_{N+1}` for `N = MAX_DEGREE`.
pub const MAX_INTEGRALS: usize = MAX_DEGREE + 2;

/// Cap on the extra indices the downward recursion starts above the target.
const DOWNWARD_MAX_EXTRA: usize = 200;

/// Upward recursion is abandoned for `t₀ < 0` once `λ t₀²` reaches this.
const RECESSIVE_FROM: f64 = 2.0;

/// Extra indices for the normalised downward run.
const NORMALISED_EXTRA: usize = 120;

/// Target damping of the downward start-up error, squared (errors shrink by
/// roughly the factor per pair of steps).
const DOWNWARD_DAMPING: f64 = 1e-34;

/// The error function, accurate to a few ulp.
#[inline]
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// The complementary error function `1 - erf(x)`.
#[inline]
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Receives one notification per transcendental evaluation.
pub trait CallCounter {
    fn erf(&mut self);
    fn exp(&mut self);
}

/// Counter that discards everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoCount;

impl CallCounter for NoCount {
    #[inline(always)]
    fn erf(&mut self) {}
    #[inline(always)]
    fn exp(&mut self) {}
}

/// Tally of transcendental evaluations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CallCounts {
    /// `erf` / `erfc` evaluations.
    pub erf: u64,
    /// `exp` / `expm1` evaluations.
    pub exp: u64,
}

impl CallCounter for CallCounts {
    #[inline]
    fn erf(&mut self) {
        self.erf += 1;
    }
    #[inline]
    fn exp(&mut self) {
        self.exp += 1;
    }
}

impl std::ops::AddAssign for CallCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.erf += rhs.erf;
        self.exp += rhs.exp;
    }
}

/// Stretched range-kernel parameters at one pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeParams {
    /// `λ = (β - α)² / 2σ²`.
    pub lambda: f64,
    /// Kernel center in stretched coordinates, `(θ - α) / (β - α)`.
    pub t0: f64,
}

impl RangeParams {
    pub fn new(lambda: f64, t0: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive and finite, got {lambda}")));
        }
        if !t0.is_finite() {
            return Err(Error::invalid(format!("t0 must be finite, got {t0}")));
        }
        Ok(Self { lambda, t0 })
    }

    /// Parameters for bounds `[α, β]`, kernel center `θ` and width `σ`.
    #[inline]
    pub fn from_bounds(alpha: f64, beta: f64, theta: f64, sigma: f64) -> Self {
        let range = beta - alpha;
        Self {
            lambda: 0.5 * range * range / (sigma * sigma),
            t0: (theta - alpha) / range,
        }
    }
}

/// `I_0`, `I_1` and the kernel's values at both ends of `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Seeds {
    pub i0: f64,
    pub i1: f64,
    /// `exp(-λ t₀²)`.
    pub origin_exp: f64,
    /// `exp(-λ (1 - t₀)²)`, reused by the recursion.
    pub edge_exp: f64,
}


/// Both arguments beyond this on the same side use the `erfc` form.
const ERFC_SWITCH: f64 = 0.5;

/// `erf(b) - erf(a)` for `a ≤ b`. When both arguments sit in the same tail,
/// `erf` is close to ±1 and the difference cancels; `erfc` keeps it.
#[inline]
fn erf_difference<C: CallCounter>(a: f64, b: f64, counter: &mut C) -> f64 {
    counter.erf();
    counter.erf();
    if a >= ERFC_SWITCH {
        erfc(a) - erfc(b)
    } else if b <= -ERFC_SWITCH {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

#[inline]
pub(crate) fn seeds_counted<C: CallCounter>(p: RangeParams, counter: &mut C) -> Seeds {
    let RangeParams { lambda, t0 } = p;
    let root = lambda.sqrt();
    let d = erf_difference(-root * t0, root * (1.0 - t0), counter);
    let i0 = 0.5 * (std::f64::consts::PI / lambda).sqrt() * d;

    let u = 1.0 - t0;
    counter.exp();
    let edge_exp = (-lambda * u * u).exp();
    // exp(-λ t₀²) - exp(-λ (1 - t₀)²) = edge_exp · expm1(λ (1 - 2 t₀)).
    let x = lambda * (1.0 - 2.0 * t0);
    counter.exp();
    let (diff, origin_exp) = if x.abs() < 0.5 {
        let diff = edge_exp * x.exp_m1();
        (diff, edge_exp + diff)
    } else {
        let origin_exp = (-lambda * t0 * t0).exp();
        (origin_exp - edge_exp, origin_exp)
    };
    let i1 = t0 * i0 + diff / (2.0 * lambda);
    Seeds {
        i0,
        i1,
        origin_exp,
        edge_exp,
    }
}

/// `I_0` and `I_1` from two error functions and two exponentials.
pub fn seed_integrals(p: RangeParams) -> Seeds {
    seeds_counted(p, &mut NoCount)
}

/// How a vector of integrals was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegralPath {
    Upward,
    Downward,
    /// Downward from an arbitrary start, rescaled to match `I_0`.
    Normalised,
    /// `λ` below [`LAMBDA_FLOOR`]; no transcendental evaluations.
    FlatLimit,
}

/// Fills `out[2..]` from the seeds. `out.len()` is the number of integrals.
#[inline]
pub(crate) fn recur_into(p: RangeParams, seeds: Seeds, out: &mut [f64]) -> IntegralPath {
    let RangeParams { lambda, t0 } = p;
    let len = out.len();
    out[0] = seeds.i0;
    if len > 1 {
        out[1] = seeds.i1;
    }
    if len <= 2 {
        return if lambda < DOWNWARD_BELOW {
            IntegralPath::Downward
        } else {
            IntegralPath::Upward
        };
    }
    let half_inv = 0.5 / lambda;
    let tail = seeds.edge_exp * half_inv;

    if lambda >= DOWNWARD_BELOW && t0 < 0.0 && lambda * t0 * t0 >= RECESSIVE_FROM {
        normalised_into(lambda, t0, seeds, out);
        return IntegralPath::Normalised;
    }
    if lambda >= DOWNWARD_BELOW {
        for k in 2..len {
            out[k] = t0 * out[k - 1] + (k - 1) as f64 * half_inv * out[k - 2] - tail;
        }
        return IntegralPath::Upward;
    }

    // I_{k-2} = (2λ (I_k - t₀ I_{k-1}) + e) / (k - 1), started from zeros
    // far enough above the last wanted index.
    let last = len - 1;
    let growth = 2.0 * lambda * (1.0 + t0.abs());
    // At least two zero entries above `last`.
    let mut top = last + 1;
    let mut damping = 1.0;
    while damping > DOWNWARD_DAMPING && top < last + DOWNWARD_MAX_EXTRA {
        top += 1;
        damping *= growth / (top - 1) as f64;
    }
    let two_lambda = 2.0 * lambda;
    let e = seeds.edge_exp;
    let (mut hi, mut lo) = (0.0, 0.0); // I_k, I_{k-1}
    for k in (4..=top).rev() {
        let next = (two_lambda * (hi - t0 * lo) + e) / (k - 1) as f64;
        hi = lo;
        lo = next;
        // `hi` is now I_{k-1}, `lo` is I_{k-2}.
        if k - 1 <= last {
            out[k - 1] = hi;
        }
        if k - 2 <= last {
            out[k - 2] = lo;
        }
    }
    IntegralPath::Downward
}

/// Runs the inhomogeneous recursion `P` and the homogeneous one `H` downward
/// together, then sets `I = P + c H` with `c` fixed by `I_0`.
fn normalised_into(lambda: f64, t0: f64, seeds: Seeds, out: &mut [f64]) {
    let last = out.len() - 1;
    let mut stack = [0.0; MAX_INTEGRALS];
    let mut heap = Vec::new();
    let h: &mut [f64] = if out.len() <= MAX_INTEGRALS {
        &mut stack[..out.len()]
    } else {
        heap.resize(out.len(), 0.0);
        &mut heap
    };
    let top = last + NORMALISED_EXTRA;
    let two_lambda = 2.0 * lambda;
    let e = seeds.edge_exp;
    // (value at k, value at k-1) for both solutions.
    let (mut p_hi, mut p_lo) = (0.0, 0.0);
    let (mut h_hi, mut h_lo) = (0.0, 1.0);
    for k in (2..=top).rev() {
        let inv = 1.0 / (k - 1) as f64;
        let p_next = (two_lambda * (p_hi - t0 * p_lo) + e) * inv;
        let h_next = two_lambda * (h_hi - t0 * h_lo) * inv;
        p_hi = p_lo;
        p_lo = p_next;
        h_hi = h_lo;
        h_lo = h_next;
        if k - 1 <= last {
            out[k - 1] = p_hi;
            h[k - 1] = h_hi;
        }
        if k - 2 <= last {
            out[k - 2] = p_lo;
            h[k - 2] = h_lo;
        }
        if h_lo.abs() > 1e150 {
            h_hi *= 1e-150;
            h_lo *= 1e-150;
            for v in h[(k - 2).min(last + 1)..].iter_mut() {
                *v *= 1e-150;
            }
        }
    }
    // Scale by H_k / H_0 rather than through c, which can underflow.
    let gap = seeds.i0 - out[0];
    let h0 = h[0];
    if h0 != 0.0 {
        for (o, &hk) in out.iter_mut().zip(h.iter()) {
            *o += gap * (hk / h0);
        }
    }
    out[0] = seeds.i0;
}

/// `I_0 … I_{len-1}` with the flat-kernel limit below [`LAMBDA_FLOOR`].
#[inline]
pub(crate) fn integrals_counted<C: CallCounter>(
    p: RangeParams,
    out: &mut [f64],
    counter: &mut C,
) -> IntegralPath {
    if p.lambda < LAMBDA_FLOOR {
        for (k, o) in out.iter_mut().enumerate() {
            *o = 1.0 / (k + 1) as f64;
        }
        return IntegralPath::FlatLimit;
    }
    let seeds = seeds_counted(p, counter);
    recur_into(p, seeds, out)
}

/// `I_0 … I_K` for one parameter pair.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegralVector {
    pub values: Vec<f64>,
    pub path: IntegralPath,
}

/// Extends the seeds to `I_0 … I_{max_k}` with the recursion.
pub fn recur_integrals(p: RangeParams, seeds: Seeds, max_k: usize) -> IntegralVector {
    let mut values = vec![0.0; max_k + 1];
    let path = recur_into(p, seeds, &mut values);
    IntegralVector { values, path }
}

/// `I_0 … I_{max_k}`, including the flat limit for vanishing `λ`.
pub fn range_integrals(p: RangeParams, max_k: usize) -> IntegralVector {
    let mut values = vec![0.0; max_k + 1];
    let path = integrals_counted(p, &mut values, &mut NoCount);
    IntegralVector { values, path }
}
