//! σ/θ map construction and the three filtering pipelines.
//!
//! All σ values here are on the 8-bit `[0, 255]` scale. Color images get
//! their σ map from luma and are then filtered channel by channel.

mod deblock;
mod sharpen;
mod texture;

pub use deblock::{deblock_pipeline, deblock_sigma, discontinuity_map, DeblockOutput, DeblockParams, BLOCK_SIZE};
pub use sharpen::{laplacian_of_gaussian, sharpen_maps, sharpen_pipeline, SharpenMaps, SharpenOutput, SharpenParams};
pub use texture::{mrtv, texture_pipeline, TextureOutput, TextureParams};

use crate::error::{Error, Result};
use crate::filter::{fast_abf, FilterConfig, FilterInput};
use crate::image::{GrayImage, Image, ParamField};

/// Maps `[lo_in, hi_in]` affinely onto `[sigma_hi, sigma_lo]` (decreasing)
/// and clamps. A degenerate input range maps everything to `sigma_hi`.
pub(crate) fn decreasing_affine(
    x: &ParamField,
    lo_in: f64,
    hi_in: f64,
    sigma_lo: f64,
    sigma_hi: f64,
) -> ParamField {
    let span = hi_in - lo_in;
    if !(span > 1e-12) {
        return x.map(|_| sigma_hi);
    }
    x.map(|v| {
        let t = ((v - lo_in) / span).clamp(0.0, 1.0);
        (sigma_hi + t * (sigma_lo - sigma_hi)).clamp(sigma_lo, sigma_hi)
    })
}

pub(crate) fn check_endpoints(sigma_lo: f64, sigma_hi: f64) -> Result<()> {
    if !(sigma_lo > 0.0 && sigma_lo.is_finite() && sigma_hi.is_finite() && sigma_hi >= sigma_lo) {
        return Err(Error::invalid(format!(
            "sigma endpoints need sigma_hi >= sigma_lo > 0, got lo={sigma_lo}, hi={sigma_hi}"
        )));
    }
    Ok(())
}

/// Runs `fast_abf` on every channel with a shared σ map (8-bit scale) and a
/// per-channel θ.
pub(crate) fn filter_channels(
    img: &Image,
    sigma_8bit: &ParamField,
    cfg: &FilterConfig,
    theta: impl Fn(&GrayImage) -> GrayImage,
) -> Result<Image> {
    img.try_map_channels(|ch| {
        let input = FilterInput::new(ch.clone(), sigma_8bit, theta(ch))?;
        fast_abf(&input, cfg)
    })
}
