//! Fast adaptive bilateral filtering.
//!
//! The filter replaces each pixel by a range- and space-weighted average of
//! its neighbours, where the range kernel's center `θ(i)` and width `σ(i)`
//! may change from pixel to pixel. [`fast_abf`] approximates it at a cost per
//! pixel that does not depend on the spatial kernel width; [`brute_force_abf`]
//! evaluates it directly.
//!
//! Intensities are `f64` on `[0, 1]`. σ values at the API boundary are on the
//! 8-bit `[0, 255]` scale.

// `!(x > y)` is used on purpose wherever NaN must take the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apps;
pub mod error;
pub mod filter;
pub mod image;
pub mod integrals;
pub mod io;
pub mod moments;
pub mod spatial;

pub use error::{Error, Result};
pub use filter::{
    brute_force_abf, fast_abf, fast_abf_with_stats, stretched_histogram_reference, psnr, FilterConfig, FilterInput, FilterStats,
};
pub use image::{ColorImage, GrayImage, Image, ParamField, Plane};
pub use spatial::{KernelShape, KernelSpec};
