//! Texture removal: two smoothing passes driven by mRTV, then sharpening.
//!
//! ```text
//! mRTV(i) = Δ(i) · max_W ‖∇f‖ / (Σ_W ‖∇f‖ + ε),   Δ(i) = max_W f - min_W f
//! ```
//!
//! Windows are squares with mirrored boundaries. σ is a decreasing affine
//! map of mRTV over its observed range, computed once on luma; the second
//! pass reuses it scaled down.

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::image::{GrayImage, Image, ParamField, Plane};
use crate::spatial::{local_min_max, weighted_local_sum, KernelSpec};

use super::sharpen::{sharpen_pipeline, SharpenParams};
use super::{check_endpoints, decreasing_affine, filter_channels};

#[derive(Clone, Debug, PartialEq)]
pub struct TextureParams {
    /// Radius of the mRTV window `W`.
    pub patch_radius: usize,
    /// Guard added to the gradient sum.
    pub eps: f64,
    /// σ at the largest mRTV (8-bit scale).
    pub sigma_lo: f64,
    /// σ at the smallest mRTV (8-bit scale).
    pub sigma_hi: f64,
    /// Factor applied to σ for the second smoothing pass.
    pub second_pass_scale: f64,
    pub sharpen: SharpenParams,
}

impl TextureParams {
    pub const DEFAULT_PATCH_RADIUS: usize = 2;
    pub const DEFAULT_EPS: f64 = 1e-9;
    pub const DEFAULT_SIGMA_LO: f64 = 5.0;
    pub const DEFAULT_SIGMA_HI: f64 = 60.0;
    pub const DEFAULT_SECOND_PASS_SCALE: f64 = 0.8;

    pub fn new(rho: f64) -> Self {
        Self {
            patch_radius: Self::DEFAULT_PATCH_RADIUS,
            eps: Self::DEFAULT_EPS,
            sigma_lo: Self::DEFAULT_SIGMA_LO,
            sigma_hi: Self::DEFAULT_SIGMA_HI,
            second_pass_scale: Self::DEFAULT_SECOND_PASS_SCALE,
            sharpen: SharpenParams::new(rho),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid(format!("mRTV eps must be positive, got {}", self.eps)));
        }
        let s = self.second_pass_scale;
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::invalid(format!("second-pass scale must lie in (0, 1], got {s}")));
        }
        check_endpoints(self.sigma_lo, self.sigma_hi)?;
        self.sharpen.validate()
    }
}

/// Derivative along one axis: central inside, one-sided at the ends, zero
/// for a single sample.
fn derivative(n: usize, at: impl Fn(usize) -> f64, i: usize) -> f64 {
    if n < 2 {
        0.0
    } else if i == 0 {
        at(1) - at(0)
    } else if i == n - 1 {
        at(n - 1) - at(n - 2)
    } else {
        0.5 * (at(i + 1) - at(i - 1))
    }
}

/// Euclidean norm of the spatial gradient.
fn gradient_magnitude(f: &GrayImage) -> ParamField {
    let (w, h) = f.dimensions();
    Plane::from_fn(w, h, |x, y| {
        let gx = derivative(w, |i| f.get(i, y), x);
        let gy = derivative(h, |j| f.get(x, j), y);
        gx.hypot(gy)
    })
}

pub fn mrtv(f: &GrayImage, p: &TextureParams) -> ParamField {
    let r = p.patch_radius;
    let grad = gradient_magnitude(f);
    let range = local_min_max(f, r);
    let grad_max = local_min_max(&grad, r).beta;
    let grad_sum = weighted_local_sum(&grad, &KernelSpec::boxed(r));
    let (w, h) = f.dimensions();
    let mut out = Plane::filled(w, h, 0.0);
    for (i, o) in out.data_mut().iter_mut().enumerate() {
        let delta = range.beta.data()[i] - range.alpha.data()[i];
        *o = if delta == 0.0 {
            0.0
        } else {
            delta * grad_max.data()[i] / (grad_sum.data()[i].max(0.0) + p.eps)
        };
    }
    out
}

fn texture_sigma(luma: &GrayImage, p: &TextureParams) -> ParamField {
    let m = mrtv(luma, p);
    decreasing_affine(&m, m.min_value(), m.max_value(), p.sigma_lo, p.sigma_hi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TextureOutput {
    pub image: Image,
    /// σ of the first pass (8-bit scale).
    pub sigma_pass1: ParamField,
    /// σ of the second pass.
    pub sigma_pass2: ParamField,
    /// σ of the sharpening pass.
    pub sigma_sharpen: ParamField,
}

pub fn texture_pipeline(img: &Image, p: &TextureParams, cfg: &FilterConfig) -> Result<TextureOutput> {
    p.validate()?;
    let sigma_pass1 = texture_sigma(&img.luma(), p);
    let pass1 = filter_channels(img, &sigma_pass1, cfg, Clone::clone)?;
    let sigma_pass2 = sigma_pass1.map(|s| s * p.second_pass_scale);
    let pass2 = filter_channels(&pass1, &sigma_pass2, cfg, Clone::clone)?;
    let sharpened = sharpen_pipeline(&pass2, &p.sharpen, cfg)?;
    Ok(TextureOutput {
        image: sharpened.image,
        sigma_pass1,
        sigma_pass2,
        sigma_sharpen: sharpened.sigma,
    })
}
