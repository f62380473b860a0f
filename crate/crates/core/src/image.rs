//! Image containers.
//!
//! Every field in this crate is a row-major grid of `f64` values. Intensity
//! images live on `[0, 1]`; parameter fields (range-kernel widths, centers and
//! the derived maps the applications build) share the same storage type.

use crate::error::{Error, Result};

/// Row-major 2-D grid of real values.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

/// Grayscale intensity image, values nominally on `[0, 1]`.
pub type GrayImage = Plane;

/// Per-pixel parameter field (σ, θ, discontinuity map, ...).
pub type ParamField = Plane;

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Plane with every sample equal to `value`.
    ///
    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two equally sized planes.
    pub fn zip_map(&self, other: &Plane, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_dims(other)?;
        Ok(Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn ensure_same_dims(&self, other: &Plane) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch {
                expected: self.dimensions(),
                found: other.dimensions(),
            });
        }
        Ok(())
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `true` when every sample is bitwise equal to the first one.
    pub fn is_constant(&self) -> bool {
        let first = self.data[0];
        self.data.iter().all(|v| v.to_bits() == first.to_bits())
    }
}

/// Three-channel (RGB) image; each channel is a [`GrayImage`].
#[derive(Clone, Debug, PartialEq)]
pub struct ColorImage {
    channels: [GrayImage; 3],
}

impl ColorImage {
    pub fn new(r: GrayImage, g: GrayImage, b: GrayImage) -> Result<Self> {
        r.ensure_same_dims(&g)?;
        r.ensure_same_dims(&b)?;
        Ok(Self {
            channels: [r, g, b],
        })
    }

    /// Color image whose three channels are copies of `gray`.
    pub fn from_gray(gray: &GrayImage) -> Self {
        Self {
            channels: [gray.clone(), gray.clone(), gray.clone()],
        }
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.channels[0].dimensions()
    }

    pub fn channels(&self) -> &[GrayImage; 3] {
        &self.channels
    }

    pub fn channel(&self, index: usize) -> &GrayImage {
        &self.channels[index]
    }

    pub fn into_channels(self) -> [GrayImage; 3] {
        self.channels
    }

    /// Applies a fallible per-channel operation, preserving channel order.
    pub fn try_map_channels(
        &self,
        mut f: impl FnMut(&GrayImage) -> Result<GrayImage>,
    ) -> Result<Self> {
        let [r, g, b] = &self.channels;
        Self::new(f(r)?, f(g)?, f(b)?)
    }
}

/// Either kind of image handled by the I/O layer and the pipelines.
#[derive(Clone, Debug, PartialEq)]
pub enum Image {
    Gray(GrayImage),
    Color(ColorImage),
}

impl Image {
    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            Image::Gray(g) => g.dimensions(),
            Image::Color(c) => c.dimensions(),
        }
    }

    /// Luma for color images, the image itself for grayscale ones.
    pub fn luma(&self) -> GrayImage {
        match self {
            Image::Gray(g) => g.clone(),
            Image::Color(c) => to_grayscale(c),
        }
    }

    /// Runs `f` on every channel; the result has the same kind as `self`.
    pub fn try_map_channels(
        &self,
        mut f: impl FnMut(&GrayImage) -> Result<GrayImage>,
    ) -> Result<Image> {
        Ok(match self {
            Image::Gray(g) => Image::Gray(f(g)?),
            Image::Color(c) => Image::Color(c.try_map_channels(f)?),
        })
    }
}

impl From<GrayImage> for Image {
    fn from(g: GrayImage) -> Self {
        Image::Gray(g)
    }
}

impl From<ColorImage> for Image {
    fn from(c: ColorImage) -> Self {
        Image::Color(c)
    }
}

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Converts RGB to luma `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(img: &ColorImage) -> GrayImage {
    let [r, g, b] = img.channels();
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let data = r
        .data()
        .iter()
        .zip(g.data())
        .zip(b.data())
        .map(|((&r, &g), &b)| wr * r + wg * g + wb * b)
        .collect();
    let (w, h) = img.dimensions();
    Plane {
        width: w,
        height: h,
        data,
    }
}

/// Rescales a σ field given on the 8-bit `[0, 255]` scale to the `[0, 1]`
/// intensity scale used by the filters.
pub fn normalize_sigma(sigma_8bit: &ParamField) -> Result<ParamField> {
    if let Some(bad) = sigma_8bit
        .data()
        .iter()
        .find(|&&s| !(s > 0.0 && s.is_finite()))
    {
        return Err(Error::invalid(format!(
            "range kernel width must be positive and finite, found {bad}"
        )));
    }
    Ok(sigma_8bit.map(|s| s / 255.0))
}
