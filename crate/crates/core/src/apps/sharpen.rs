//! Sharpening with simultaneous smoothing of fine grain.
//!
//! `θ = f + ζ`, `ζ = f - f̄`, where `f̄` is the plain mean over the filter
//! window. σ comes from a decreasing affine map of `|LoG ∗ f|`.

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::image::{GrayImage, Image, ParamField};
use crate::spatial::{box_mean, separable_symmetric, KernelSpec};

use super::{check_endpoints, decreasing_affine, filter_channels};

#[derive(Clone, Debug, PartialEq)]
pub struct SharpenParams {
    /// Width of the spatial kernel; sets the window for `f̄`.
    pub rho: f64,
    /// Standard deviation of the Laplacian-of-Gaussian.
    pub log_std: f64,
    /// σ where the LoG response is largest (8-bit scale).
    pub sigma_lo: f64,
    /// σ where the LoG response is zero (8-bit scale).
    pub sigma_hi: f64,
}

impl SharpenParams {
    pub const DEFAULT_SIGMA_LO: f64 = 5.0;
    pub const DEFAULT_SIGMA_HI: f64 = 30.0;

    /// Defaults: LoG std `ρ / 2`, σ from 30 down to 5.
    pub fn new(rho: f64) -> Self {
        Self {
            rho,
            log_std: rho / 2.0,
            sigma_lo: Self::DEFAULT_SIGMA_LO,
            sigma_hi: Self::DEFAULT_SIGMA_HI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        KernelSpec::gaussian(self.rho)?;
        if !(self.log_std > 0.0 && self.log_std.is_finite()) {
            return Err(Error::invalid(format!("LoG std must be positive, got {}", self.log_std)));
        }
        check_endpoints(self.sigma_lo, self.sigma_hi)
    }

    fn window_radius(&self) -> usize {
        (3.0 * self.rho).ceil() as usize
    }
}

/// LoG response with mirrored boundaries, computed as
/// `g'' ⊗ g + g ⊗ g''` from a unit-sum sampled Gaussian `g`.
pub fn laplacian_of_gaussian(f: &GrayImage, std: f64) -> ParamField {
    let r = ((3.0 * std).ceil() as isize).max(1);
    let s2 = std * std;
    let mut g: Vec<f64> = (-r..=r).map(|k| (-((k * k) as f64) / (2.0 * s2)).exp()).collect();
    let total: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= total);
    let mut d2: Vec<f64> = (-r..=r)
        .zip(&g)
        .map(|(k, &gk)| gk * (((k * k) as f64) - s2) / (s2 * s2))
        .collect();
    // Truncation leaves a small DC term and a second moment slightly off 2;
    // fix both so constants map to zero and `x²` to exactly 2.
    let dc: f64 = d2.iter().sum();
    d2.iter_mut().zip(&g).for_each(|(d, &gk)| *d -= dc * gk);
    let m2: f64 = (-r..=r).zip(&d2).map(|(k, &d)| (k * k) as f64 * d).sum();
    d2.iter_mut().for_each(|d| *d *= 2.0 / m2);
    let a = separable_symmetric(f, &d2, &g);
    let b = separable_symmetric(f, &g, &d2);
    a.zip_map(&b, |x, y| x + y).expect("same dimensions")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharpenMaps {
    /// 8-bit scale.
    pub sigma: ParamField,
    pub theta: ParamField,
}

fn sharpen_theta(f: &GrayImage, radius: usize) -> ParamField {
    let mean = box_mean(f, radius);
    f.zip_map(&mean, |v, m| 2.0 * v - m).expect("same dimensions")
}

fn sharpen_sigma(luma: &GrayImage, p: &SharpenParams) -> ParamField {
    let response = laplacian_of_gaussian(luma, p.log_std).map(f64::abs);
    decreasing_affine(&response, 0.0, response.max_value(), p.sigma_lo, p.sigma_hi)
}

pub fn sharpen_maps(f: &GrayImage, p: &SharpenParams) -> Result<SharpenMaps> {
    p.validate()?;
    Ok(SharpenMaps {
        sigma: sharpen_sigma(f, p),
        theta: sharpen_theta(f, p.window_radius()),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharpenOutput {
    pub image: Image,
    /// 8-bit scale, computed on luma.
    pub sigma: ParamField,
}

pub fn sharpen_pipeline(img: &Image, p: &SharpenParams, cfg: &FilterConfig) -> Result<SharpenOutput> {
    p.validate()?;
    let sigma = sharpen_sigma(&img.luma(), p);
    let radius = p.window_radius();
    let image = filter_channels(img, &sigma, cfg, |ch| sharpen_theta(ch, radius))?;
    Ok(SharpenOutput { image, sigma })
}
