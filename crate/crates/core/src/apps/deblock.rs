//! Removal of JPEG blocking artifacts.
//!
//! The image is tiled by 8×8 blocks aligned to pixel `(0, 0)`. Pixels on a
//! block edge get the absolute intensity jump across that edge (8-bit
//! scale), corners the larger of their two jumps, and edges on the image
//! border count as no jump. Inside the block the jumps ramp linearly down to
//! zero at the four center pixels, once along rows and once along columns;
//! the larger ramp wins. Then `σ = max(σ₀, B)` and `θ = f`.

use crate::error::{Error, Result};
use crate::filter::FilterConfig;
use crate::image::{GrayImage, Image, ParamField, Plane};

use super::filter_channels;

pub const BLOCK_SIZE: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct DeblockParams {
    /// Floor for σ, 8-bit scale.
    pub sigma0: f64,
}

impl DeblockParams {
    pub fn new(sigma0: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(Error::invalid(format!("sigma0 must be positive, got {sigma0}")));
        }
        Ok(Self { sigma0 })
    }
}

/// Weight of the near edge at offset `u` inside a block: 1 on the edge,
/// 0 at the two center columns.
fn ramp(u: usize) -> f64 {
    let last = (BLOCK_SIZE - 1) as f64;
    let half = last / 2.0;
    let d = (u as f64 - half).abs(); // 3.5 on an edge, 0.5 at the center
    (d - 0.5) / (half - 0.5)
}

/// Discontinuity map `B` on the 8-bit scale.
pub fn discontinuity_map(f: &GrayImage) -> Result<ParamField> {
    let (w, h) = f.dimensions();
    if w < BLOCK_SIZE || h < BLOCK_SIZE {
        return Err(Error::invalid(format!(
            "deblocking needs at least {BLOCK_SIZE}x{BLOCK_SIZE} pixels, got {w}x{h}"
        )));
    }
    let s = |x: usize, y: usize| 255.0 * f.get(x, y);
    // Jump between (x, y) and (x + 1, y), or 0 past the image border.
    let jump_x = |x: usize, y: usize| if x + 1 < w { (s(x + 1, y) - s(x, y)).abs() } else { 0.0 };
    let jump_y = |x: usize, y: usize| if y + 1 < h { (s(x, y + 1) - s(x, y)).abs() } else { 0.0 };
    let b = BLOCK_SIZE;

    Ok(Plane::from_fn(w, h, |x, y| {
        let (u, v) = (x % b, y % b);
        let (x0, y0) = (x - u, y - v);
        // Jumps across the left/right edges on this row and the top/bottom
        // edges on this column.
        let left = if x0 > 0 { jump_x(x0 - 1, y) } else { 0.0 };
        let right = jump_x(x0 + b - 1, y);
        let top = if y0 > 0 { jump_y(x, y0 - 1) } else { 0.0 };
        let bottom = jump_y(x, y0 + b - 1);

        let on_v_edge = u == 0 || u == b - 1;
        let on_h_edge = v == 0 || v == b - 1;
        let along_row = if u < b / 2 { left } else { right };
        let along_col = if v < b / 2 { top } else { bottom };
        match (on_v_edge, on_h_edge) {
            (true, true) => along_row.max(along_col),
            (true, false) => along_row,
            (false, true) => along_col,
            (false, false) => (ramp(u) * along_row).max(ramp(v) * along_col),
        }
    }))
}

/// `σ = max(σ₀, B)` on the 8-bit scale.
pub fn deblock_sigma(f: &GrayImage, p: &DeblockParams) -> Result<ParamField> {
    Ok(discontinuity_map(f)?.map(|b| b.max(p.sigma0)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeblockOutput {
    pub image: Image,
    /// 8-bit scale, computed on luma.
    pub sigma: ParamField,
}

pub fn deblock_pipeline(img: &Image, p: &DeblockParams, cfg: &FilterConfig) -> Result<DeblockOutput> {
    let sigma = deblock_sigma(&img.luma(), p)?;
    let image = filter_channels(img, &sigma, cfg, Clone::clone)?;
    Ok(DeblockOutput { image, sigma })
}
