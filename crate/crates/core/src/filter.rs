//! The adaptive bilateral filter.
//!
//! ```text
//! g(i) = Σ_j ω(j) φ_i(f(i-j) - θ(i)) f(i-j) / Σ_j ω(j) φ_i(f(i-j) - θ(i))
//! φ_i(t) = exp(-t² / 2σ(i)²)
//! ```
//!
//! [`brute_force_abf`] evaluates the sums directly and is the reference for
//! every accuracy measurement. [`fast_abf`] replaces each local histogram by
//! a moment-matched polynomial on the stretched range `[0, 1]`, which turns
//! the sums into a handful of closed-form integrals per pixel.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{normalize_sigma, GrayImage, ParamField, Plane};
use crate::integrals::{integrals_counted, CallCounter, CallCounts, IntegralPath, NoCount, RangeParams, MAX_INTEGRALS};
use crate::moments::{hilbert_inverse, raw_moments, stretch_into, BinomialTable, HilbertInverse, MAX_DEGREE};
use crate::spatial::{local_min_max, mirror_index, KernelSpec};

/// Default polynomial degree.
pub const DEFAULT_DEGREE: usize = 5;

/// Bounds closer than this take the identity path.
pub const DEFAULT_EPS_BOUNDS: f64 = 1e-9;

/// Denominators smaller than this in magnitude are treated as vanished.
pub const DEFAULT_EPS_DENOM: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq)]
pub struct FilterConfig {
    pub kernel: KernelSpec,
    /// Polynomial degree `N`, at most [`MAX_DEGREE`].
    pub degree: usize,
    pub eps_bounds: f64,
    pub eps_denom: f64,
    /// Clamp the fitted output to the local range `[α, β]`, where the exact
    /// filter output always lies. Off by default so accuracy is measured on
    /// the raw approximation; low degrees can fit a polynomial that goes
    /// negative under the range kernel and produce arbitrarily large ratios.
    pub clamp_to_bounds: bool,
}

impl FilterConfig {
    /// Gaussian spatial kernel of width `rho`.
    pub fn gaussian(rho: f64, degree: usize) -> Result<Self> {
        Self::with_kernel(KernelSpec::gaussian(rho)?, degree)
    }

    pub fn with_kernel(kernel: KernelSpec, degree: usize) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::invalid(format!(
                "degree must be in 0..={MAX_DEGREE}, got {degree}"
            )));
        }
        Ok(Self {
            kernel,
            degree,
            eps_bounds: DEFAULT_EPS_BOUNDS,
            eps_denom: DEFAULT_EPS_DENOM,
            clamp_to_bounds: false,
        })
    }

    pub fn rho(&self) -> f64 {
        self.kernel.rho()
    }
}

/// Image plus per-pixel range kernel parameters.
///
/// `sigma` is stored on the `[0, 1]` intensity scale; `theta` lives on the
/// same scale as the image.
#[derive(Clone, Debug)]
pub struct FilterInput {
    image: GrayImage,
    sigma: ParamField,
    theta: ParamField,
}

impl FilterInput {
    /// `sigma_8bit` is on the `[0, 255]` scale and is normalized here.
    pub fn new(image: GrayImage, sigma_8bit: &ParamField, theta: ParamField) -> Result<Self> {
        Self::with_unit_sigma(image, normalize_sigma(sigma_8bit)?, theta)
    }

    /// Classical bilateral filter: `θ = f` and a constant `σ₀` (8-bit scale).
    pub fn classical(image: GrayImage, sigma0_8bit: f64) -> Result<Self> {
        let (w, h) = image.dimensions();
        let theta = image.clone();
        Self::new(image, &Plane::filled(w, h, sigma0_8bit), theta)
    }

    /// `sigma` already on the `[0, 1]` scale.
    pub fn with_unit_sigma(image: GrayImage, sigma: ParamField, theta: ParamField) -> Result<Self> {
        image.ensure_same_dims(&sigma)?;
        image.ensure_same_dims(&theta)?;
        if let Some(s) = sigma.data().iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("sigma must be positive and finite, found {s}")));
        }
        if let Some(t) = theta.data().iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid(format!("theta must be finite, found {t}")));
        }
        Ok(Self { image, sigma, theta })
    }

    pub fn image(&self) -> &GrayImage {
        &self.image
    }

    /// Range kernel widths on the `[0, 1]` scale.
    pub fn sigma(&self) -> &ParamField {
        &self.sigma
    }

    pub fn theta(&self) -> &ParamField {
        &self.theta
    }
}

/// Bookkeeping from one run of the fast filter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FilterStats {
    /// Transcendental evaluations in the per-pixel loop.
    pub calls: CallCounts,
    /// Pixels whose window holds a single intensity.
    pub identity_pixels: u64,
    /// Pixels evaluated through the fitted polynomial.
    pub fitted_pixels: u64,
    /// Fitted pixels whose integrals used the downward recursion.
    pub downward_pixels: u64,
    /// Fitted pixels with `λ` below the floor (flat kernel).
    pub flat_limit_pixels: u64,
    /// Fitted pixels whose approximate denominator vanished.
    pub fallback_pixels: u64,
}

impl std::ops::AddAssign for FilterStats {
    fn add_assign(&mut self, o: Self) {
        self.calls += o.calls;
        self.identity_pixels += o.identity_pixels;
        self.fitted_pixels += o.fitted_pixels;
        self.downward_pixels += o.downward_pixels;
        self.flat_limit_pixels += o.flat_limit_pixels;
        self.fallback_pixels += o.fallback_pixels;
    }
}

/// Result of the fitted evaluation at one pixel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PixelOutcome {
    pub value: f64,
    pub path: IntegralPath,
    /// The approximate denominator vanished and the degree-0 ratio was used.
    pub fallback: bool,
}

/// Fitted output at one pixel with `α < β`, from its raw moments `m`
/// (length `N + 1`).
pub fn fast_pixel(
    m: &[f64],
    alpha: f64,
    beta: f64,
    theta: f64,
    sigma: f64,
    cfg: &FilterConfig,
) -> Result<PixelOutcome> {
    if m.len() != cfg.degree + 1 {
        return Err(Error::invalid(format!(
            "expected {} moments for degree {}, got {}",
            cfg.degree + 1,
            cfg.degree,
            m.len()
        )));
    }
    if !(beta > alpha) {
        return Err(Error::invalid(format!("need alpha < beta, got [{alpha}, {beta}]")));
    }
    let ainv = hilbert_inverse(cfg.degree)?;
    Ok(fast_pixel_counted(m, alpha, beta, theta, sigma, ainv, BinomialTable::get(), cfg, &mut NoCount))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn fast_pixel_counted<C: CallCounter>(
    m: &[f64],
    alpha: f64,
    beta: f64,
    theta: f64,
    sigma: f64,
    ainv: &HilbertInverse,
    binom: &BinomialTable,
    cfg: &FilterConfig,
    counter: &mut C,
) -> PixelOutcome {
    let n1 = m.len();
    let mut mu = [0.0; MAX_DEGREE + 1];
    let mut c = [0.0; MAX_DEGREE + 1];
    let mut integrals = [0.0; MAX_INTEGRALS];

    stretch_into(m, alpha, beta, binom, &mut mu[..n1]);
    ainv.apply_into(&mu[..n1], &mut c[..n1]);

    let params = RangeParams::from_bounds(alpha, beta, theta, sigma);
    let path = integrals_counted(params, &mut integrals[..n1 + 1], counter);

    let mut t1 = 0.0;
    let mut t2 = 0.0;
    for k in 0..n1 {
        t1 += c[k] * integrals[k + 1];
        t2 += c[k] * integrals[k];
    }

    let mut fallback = false;
    let mut ratio = t1 / t2;
    if !(t2.abs() >= cfg.eps_denom) || !ratio.is_finite() {
        fallback = true;
        ratio = integrals[1] / integrals[0];
        if !ratio.is_finite() {
            // Both integrals underflowed: the kernel sits far outside [0, 1]
            // and all its mass collapses onto the nearer end.
            ratio = params.t0.clamp(0.0, 1.0);
        }
    }
    if cfg.clamp_to_bounds {
        ratio = ratio.clamp(0.0, 1.0);
    }
    PixelOutcome {
        value: alpha + (beta - alpha) * ratio,
        path,
        fallback,
    }
}

fn check_input(cfg: &FilterConfig) -> Result<()> {
    if cfg.degree > MAX_DEGREE {
        return Err(Error::invalid(format!(
            "degree must be in 0..={MAX_DEGREE}, got {}",
            cfg.degree
        )));
    }
    Ok(())
}

/// Fast approximation of the adaptive bilateral filter.
pub fn fast_abf(input: &FilterInput, cfg: &FilterConfig) -> Result<GrayImage> {
    Ok(run_fast::<NoCount>(input, cfg)?.0)
}

/// [`fast_abf`] with instrumented transcendental counts and path statistics.
pub fn fast_abf_with_stats(input: &FilterInput, cfg: &FilterConfig) -> Result<(GrayImage, FilterStats)> {
    run_fast::<CallCounts>(input, cfg)
}

trait StatsCounter: CallCounter + Default + Send {
    fn into_counts(self) -> CallCounts;
}

impl StatsCounter for NoCount {
    fn into_counts(self) -> CallCounts {
        CallCounts::default()
    }
}

impl StatsCounter for CallCounts {
    fn into_counts(self) -> CallCounts {
        self
    }
}

fn run_fast<C: StatsCounter>(input: &FilterInput, cfg: &FilterConfig) -> Result<(GrayImage, FilterStats)> {
    check_input(cfg)?;
    let f = input.image();
    let (w, h) = f.dimensions();
    let n1 = cfg.degree + 1;

    let bounds = local_min_max(f, cfg.kernel.radius());
    let ainv = hilbert_inverse(cfg.degree)?;
    let moments = raw_moments(f, &cfg.kernel, cfg.degree)?;
    let planes: Vec<&[f64]> = moments.planes().iter().map(|p| p.data()).collect();
    let binom = BinomialTable::get();

    let mut out = vec![0.0; w * h];
    let stats = out
        .par_chunks_mut(w)
        .enumerate()
        .map(|(y, row)| {
            let mut stats = FilterStats::default();
            let mut counter = C::default();
            let mut m = [0.0; MAX_DEGREE + 1];
            for (x, o) in row.iter_mut().enumerate() {
                let i = y * w + x;
                let alpha = bounds.alpha.data()[i];
                let beta = bounds.beta.data()[i];
                if beta - alpha <= cfg.eps_bounds {
                    *o = f.data()[i];
                    stats.identity_pixels += 1;
                    continue;
                }
                for k in 0..n1 {
                    m[k] = planes[k][i];
                }
                let px = fast_pixel_counted(
                    &m[..n1],
                    alpha,
                    beta,
                    input.theta().data()[i],
                    input.sigma().data()[i],
                    ainv,
                    binom,
                    cfg,
                    &mut counter,
                );
                *o = px.value;
                stats.fitted_pixels += 1;
                match px.path {
                    IntegralPath::Downward | IntegralPath::Normalised => stats.downward_pixels += 1,
                    IntegralPath::FlatLimit => stats.flat_limit_pixels += 1,
                    IntegralPath::Upward => {}
                }
                stats.fallback_pixels += u64::from(px.fallback);
            }
            stats.calls = counter.into_counts();
            stats
        })
        .reduce(FilterStats::default, |mut a, b| {
            a += b;
            a
        });
    Ok((Plane::new(w, h, out)?, stats))
}

/// Mirrored source indices for every window offset along one axis:
/// `table[p * diameter + d]` is the index of `p - (d - radius)`.
fn offset_table(n: usize, radius: usize) -> Vec<usize> {
    let d = 2 * radius + 1;
    let mut t = Vec::with_capacity(n * d);
    for p in 0..n as isize {
        for off in 0..d as isize {
            t.push(mirror_index(p - (off - radius as isize), n));
        }
    }
    t
}

/// Evaluates the filter sums directly over the window.
pub fn brute_force_abf(input: &FilterInput, cfg: &FilterConfig) -> Result<GrayImage> {
    let f = input.image();
    let (w, h) = f.dimensions();
    let r = cfg.kernel.radius();
    let d = 2 * r + 1;
    let weights = cfg.kernel.weights_2d();
    let xs = offset_table(w, r);
    let ys = offset_table(h, r);
    let src = f.data();

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let yoff = &ys[y * d..(y + 1) * d];
        for (x, o) in row.iter_mut().enumerate() {
            let i = y * w + x;
            let xoff = &xs[x * d..(x + 1) * d];
            let theta = input.theta().data()[i];
            let s = input.sigma().data()[i];
            let inv2s2 = 1.0 / (2.0 * s * s);

            let first = src[yoff[0] * w + xoff[0]];
            let mut constant = true;
            let mut num = 0.0;
            let mut den = 0.0;
            for (wy, &yy) in weights.chunks_exact(d).zip(yoff) {
                let line = &src[yy * w..(yy + 1) * w];
                for (&wt, &xx) in wy.iter().zip(xoff) {
                    let v = line[xx];
                    constant &= v == first;
                    let diff = v - theta;
                    let k = wt * (-diff * diff * inv2s2).exp();
                    num += k * v;
                    den += k;
                }
            }
            *o = if constant || !(den > f64::MIN_POSITIVE) {
                src[i]
            } else {
                num / den
            };
        }
    });
    Plane::new(w, h, out)
}

/// Evaluates the filter through the stretched histogram: with
/// `y = (t - α) / (β - α)`, `λ = (β - α)² / 2σ²` and `t₀ = (θ - α) / (β - α)`,
/// `g = α + (β - α) Σ ω y ψ(y - t₀) / Σ ω ψ(y - t₀)`, `ψ(u) = exp(-λ u²)`.
///
/// Algebraically identical to [`brute_force_abf`]; exists to check that
/// identity.
pub fn stretched_histogram_reference(input: &FilterInput, cfg: &FilterConfig) -> Result<GrayImage> {
    let f = input.image();
    let (w, h) = f.dimensions();
    let r = cfg.kernel.radius() as isize;
    let out = Plane::from_fn(w, h, |x, y| {
        let sample = |dx: isize, dy: isize| {
            f.get(mirror_index(x as isize - dx, w), mirror_index(y as isize - dy, h))
        };
        let (mut alpha, mut beta) = (f64::INFINITY, f64::NEG_INFINITY);
        for dy in -r..=r {
            for dx in -r..=r {
                let v = sample(dx, dy);
                alpha = alpha.min(v);
                beta = beta.max(v);
            }
        }
        if alpha == beta {
            return f.get(x, y);
        }
        let params = RangeParams::from_bounds(alpha, beta, input.theta().get(x, y), input.sigma().get(x, y));
        let range = beta - alpha;
        let (mut num, mut den) = (0.0, 0.0);
        for dy in -r..=r {
            for dx in -r..=r {
                let yv = (sample(dx, dy) - alpha) / range;
                let u = yv - params.t0;
                let k = cfg.kernel.weight(dx, dy) * (-params.lambda * u * u).exp();
                num += k * yv;
                den += k;
            }
        }
        if !(den > f64::MIN_POSITIVE) {
            return f.get(x, y);
        }
        alpha + range * num / den
    });
    Ok(out)
}

/// Peak signal-to-noise ratio for intensities on `[0, 1]`,
/// `10 log10(1 / MSE)`. Identical images give `+∞`.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let sse: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let mse = sse / a.len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}
