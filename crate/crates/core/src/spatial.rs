//! Spatial kernels, separable weighted sums and running extrema.
//!
//! All neighborhood operations use the same boundary rule: half-sample
//! symmetric extension (`d c b a | a b c d | d c b a`), repeated as often as
//! needed when the window is wider than the image.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::{GrayImage, ParamField, Plane};

/// Shape of the spatial kernel ω.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelShape {
    Gaussian,
    Box,
}

/// Spatial kernel on the square window `[-radius, radius]²`.
///
/// Gaussian weights are `exp(-|j|² / 2ρ²)`, unnormalized, truncated at
/// `ceil(3ρ)`. Box weights are 1.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    shape: KernelShape,
    rho: f64,
    radius: usize,
}

impl KernelSpec {
    pub fn gaussian(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            shape: KernelShape::Gaussian,
            rho,
            radius: (3.0 * rho).ceil() as usize,
        })
    }

    pub fn boxed(radius: usize) -> Self {
        Self {
            shape: KernelShape::Box,
            rho: radius as f64,
            radius,
        }
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Side length of the window.
    pub fn diameter(&self) -> usize {
        2 * self.radius + 1
    }

    /// 1-D profile `w(d)` for `d = -radius..=radius`; the 2-D kernel is
    /// `w(dx) * w(dy)`.
    pub fn profile(&self) -> Vec<f64> {
        let r = self.radius as isize;
        (-r..=r)
            .map(|d| match self.shape {
                KernelShape::Gaussian => {
                    let d = d as f64;
                    (-d * d / (2.0 * self.rho * self.rho)).exp()
                }
                KernelShape::Box => 1.0,
            })
            .collect()
    }

    /// Weight at displacement `(dx, dy)`, evaluated from the 2-D formula.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        match self.shape {
            KernelShape::Gaussian => {
                let d2 = (dx * dx + dy * dy) as f64;
                (-d2 / (2.0 * self.rho * self.rho)).exp()
            }
            KernelShape::Box => 1.0,
        }
    }

    /// Row-major 2-D weights over the window.
    pub fn weights_2d(&self) -> Vec<f64> {
        let r = self.radius as isize;
        let mut out = Vec::with_capacity(self.diameter() * self.diameter());
        for dy in -r..=r {
            for dx in -r..=r {
                out.push(self.weight(dx, dy));
            }
        }
        out
    }

    /// `W = Σ_Ω ω(j)`.
    pub fn total_weight(&self) -> f64 {
        let s: f64 = self.profile().iter().sum();
        s * s
    }
}

/// Maps an out-of-range index into `0..n` by symmetric extension.
#[inline]
pub fn mirror_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m >= n { period - 1 - m } else { m }) as usize
}

/// Copies `line` into `buf` with `radius` mirrored samples on both sides.
fn pad_mirrored(line: &[f64], radius: usize, buf: &mut Vec<f64>) {
    let n = line.len();
    buf.clear();
    buf.extend((-(radius as isize)..(n + radius) as isize).map(|i| line[mirror_index(i, n)]));
}

/// Symmetric 1-D FIR on a padded line: `out[x] = Σ_d w(d) p[x + r + d]`.
fn fir_padded(padded: &[f64], profile: &[f64], out: &mut [f64]) {
    let r = profile.len() / 2;
    let n = out.len();
    let center = profile[r];
    for (o, &p) in out.iter_mut().zip(&padded[r..r + n]) {
        *o = center * p;
    }
    for d in 1..=r {
        let w = profile[r + d];
        let left = &padded[r - d..r - d + n];
        let right = &padded[r + d..r + d + n];
        for ((o, &a), &b) in out.iter_mut().zip(left).zip(right) {
            *o += w * (a + b);
        }
    }
}

/// `(ω ∗ img)(i) = Σ_{j∈Ω} ω(j) img(i - j)` with mirrored boundaries,
/// evaluated as a horizontal pass followed by a vertical pass.
pub fn weighted_local_sum(img: &GrayImage, kernel: &KernelSpec) -> ParamField {
    let profile = kernel.profile();
    separable_symmetric(img, &profile, &profile)
}

/// Convolves with the separable kernel `hx(dx) * hy(dy)` under mirrored
/// boundaries. Both tap vectors must be symmetric with odd length.
pub fn separable_symmetric(img: &GrayImage, hx: &[f64], hy: &[f64]) -> ParamField {
    assert!(hx.len() % 2 == 1 && hy.len() % 2 == 1, "taps must have odd length");
    let (w, h) = img.dimensions();
    let rx = hx.len() / 2;
    let ry = hy.len() / 2;

    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w)
        .enumerate()
        .for_each_init(Vec::new, |buf, (y, out_row)| {
            pad_mirrored(img.row(y), rx, buf);
            fir_padded(buf, hx, out_row);
        });

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, out_row)| {
        let row = |yy: isize| {
            let s = mirror_index(yy, h) * w;
            &tmp[s..s + w]
        };
        let yi = y as isize;
        let center = hy[ry];
        for (o, &v) in out_row.iter_mut().zip(row(yi)) {
            *o = center * v;
        }
        for d in 1..=ry {
            let wt = hy[ry + d];
            let up = row(yi - d as isize);
            let down = row(yi + d as isize);
            for ((o, &a), &b) in out_row.iter_mut().zip(up).zip(down) {
                *o += wt * (a + b);
            }
        }
    });
    Plane::new(w, h, out).expect("dimensions preserved")
}

/// Unweighted mean over the `(2 radius + 1)²` window.
pub fn box_mean(img: &GrayImage, radius: usize) -> ParamField {
    let k = KernelSpec::boxed(radius);
    let count = k.total_weight();
    weighted_local_sum(img, &k).map(|s| s / count)
}

/// Per-pixel bounds of the local intensity range.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundsPair {
    pub alpha: ParamField,
    pub beta: ParamField,
}

#[inline(always)]
fn pick_min(a: f64, b: f64) -> f64 {
    if b < a {
        b
    } else {
        a
    }
}

#[inline(always)]
fn pick_max(a: f64, b: f64) -> f64 {
    if b > a {
        b
    } else {
        a
    }
}

#[derive(Default)]
struct LineScratch {
    line: Vec<f64>,
    padded: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    out: Vec<f64>,
}

/// Running extremum over windows of length `2 radius + 1` of a padded line
/// (van Herk / Gil-Werman): block-wise prefix and suffix extrema, then one
/// combination per output. Returns the number of element steps (each a
/// copy or a compare-and-select): three per sample plus the padding,
/// whatever the radius.
fn running_extreme(
    padded: &[f64],
    radius: usize,
    prefix: &mut Vec<f64>,
    suffix: &mut Vec<f64>,
    out: &mut [f64],
    pick: fn(f64, f64) -> f64,
) -> u64 {
    let k = 2 * radius + 1;
    let len = padded.len();
    debug_assert_eq!(len, out.len() + 2 * radius);
    prefix.resize(len, 0.0);
    suffix.resize(len, 0.0);

    for i in 0..len {
        prefix[i] = if i % k == 0 {
            padded[i]
        } else {
            pick(prefix[i - 1], padded[i])
        };
    }
    for i in (0..len).rev() {
        suffix[i] = if (i + 1) % k == 0 || i + 1 == len {
            padded[i]
        } else {
            pick(suffix[i + 1], padded[i])
        };
    }
    for (x, o) in out.iter_mut().enumerate() {
        *o = pick(suffix[x], prefix[x + k - 1]);
    }
    (2 * len + out.len()) as u64
}

/// Separable running extremum over the `(2 radius + 1)²` window.
fn extreme_filter(img: &GrayImage, radius: usize, pick: fn(f64, f64) -> f64) -> (Vec<f64>, u64) {
    let (w, h) = img.dimensions();

    let mut rows = vec![0.0; w * h];
    let row_ops: u64 = rows
        .par_chunks_mut(w)
        .enumerate()
        .map_init(LineScratch::default, |s, (y, out)| {
            pad_mirrored(img.row(y), radius, &mut s.padded);
            running_extreme(&s.padded, radius, &mut s.prefix, &mut s.suffix, out, pick)
        })
        .sum();

    let columns: Vec<(Vec<f64>, u64)> = (0..w)
        .into_par_iter()
        .map_init(LineScratch::default, |s, x| {
            s.line.clear();
            s.line.extend((0..h).map(|y| rows[y * w + x]));
            pad_mirrored(&s.line, radius, &mut s.padded);
            s.out.resize(h, 0.0);
            let ops = running_extreme(&s.padded, radius, &mut s.prefix, &mut s.suffix, &mut s.out, pick);
            (s.out.clone(), ops)
        })
        .collect();

    let mut out = vec![0.0; w * h];
    let mut ops = row_ops;
    for (x, (col, col_ops)) in columns.into_iter().enumerate() {
        for (y, v) in col.into_iter().enumerate() {
            out[y * w + x] = v;
        }
        ops += col_ops;
    }
    (out, ops)
}

/// Local minimum and maximum over the `(2 radius + 1)²` window.
pub fn local_min_max(img: &GrayImage, radius: usize) -> BoundsPair {
    local_min_max_counted(img, radius).0
}

/// [`local_min_max`] that also reports the number of element steps taken.
///
/// The count per pixel does not grow with `radius` apart from the padding
/// at the ends of each line.
pub fn local_min_max_counted(img: &GrayImage, radius: usize) -> (BoundsPair, u64) {
    let (w, h) = img.dimensions();
    let (alpha, min_ops) = extreme_filter(img, radius, pick_min);
    let (beta, max_ops) = extreme_filter(img, radius, pick_max);
    (
        BoundsPair {
            alpha: Plane::new(w, h, alpha).expect("dimensions preserved"),
            beta: Plane::new(w, h, beta).expect("dimensions preserved"),
        },
        min_ops + max_ops,
    )
}

/// Pointwise powers `f⁰ = 1, f¹, …, f^N`.
pub fn power_images(img: &GrayImage, degree: usize) -> Vec<GrayImage> {
    let mut out = Vec::with_capacity(degree + 1);
    let (w, h) = img.dimensions();
    out.push(Plane::filled(w, h, 1.0));
    for k in 1..=degree {
        let next = out[k - 1].zip_map(img, |p, v| p * v).expect("same dims");
        out.push(next);
    }
    out
}
