//! Reference implementations shared by the integration tests. Everything
//! here is written independently of the library internals.

#![allow(dead_code)]

use abf::{GrayImage, Plane};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn data_path(name: &str) -> String {
    format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn camera() -> GrayImage {
    abf::io::load_gray(data_path("camera.png")).expect("camera fixture")
}

pub fn moon() -> GrayImage {
    abf::io::load_gray(data_path("moon.png")).expect("moon fixture")
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut StdRng, w: usize, h: usize) -> GrayImage {
    Plane::from_fn(w, h, |_, _| rng.gen::<f64>())
}

/// Random image quantized to 8-bit levels.
pub fn random_8bit(rng: &mut StdRng, w: usize, h: usize) -> GrayImage {
    Plane::from_fn(w, h, |_, _| f64::from(rng.gen::<u8>()) / 255.0)
}

/// Whole-sample symmetric reflection, `... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...`,
/// by repeated folding.
pub fn reflect(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

pub fn gaussian_weight(dx: i64, dy: i64, rho: f64) -> f64 {
    (-((dx * dx + dy * dy) as f64) / (2.0 * rho * rho)).exp()
}

pub fn radius_for(rho: f64) -> i64 {
    (3.0 * rho).ceil() as i64
}

/// Values and Gaussian weights in the window around `(x, y)`.
pub fn window(f: &GrayImage, x: usize, y: usize, rho: f64) -> Vec<(f64, f64)> {
    let r = radius_for(rho);
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let xx = reflect(x as i64 - dx, f.width());
            let yy = reflect(y as i64 - dy, f.height());
            out.push((f.get(xx, yy), gaussian_weight(dx, dy, rho)));
        }
    }
    out
}

/// `Σ_j ω(j) f(i - j)^k` by direct summation.
pub fn histogram_moment(f: &GrayImage, x: usize, y: usize, rho: f64, k: i32) -> f64 {
    window(f, x, y, rho).iter().map(|&(v, w)| w * v.powi(k)).sum()
}

/// Classical bilateral filter with a Gaussian spatial kernel, constant range
/// width `sigma` (unit scale) and the center pixel as range reference.
pub fn classical_bilateral(f: &GrayImage, rho: f64, sigma: f64) -> GrayImage {
    Plane::from_fn(f.width(), f.height(), |x, y| {
        let c = f.get(x, y);
        let mut num = 0.0;
        let mut den = 0.0;
        for (v, w) in window(f, x, y, rho) {
            let k = w * (-(v - c) * (v - c) / (2.0 * sigma * sigma)).exp();
            num += k * v;
            den += k;
        }
        num / den
    })
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its embedded 7-point Gauss estimate.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for j in 0..7 {
        let dx = h * GK_NODES[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += GK_WEIGHTS[j] * s;
        if j % 2 == 1 {
            gauss += G_WEIGHTS[j / 2] * s;
        }
    }
    (kronrod * h, gauss * h)
}

/// Adaptive Gauss–Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (k, g) = gk15(f, a, b);
        // exp of a large argument carries relative noise near 1e-11, which
        // bounds the reachable accuracy from below.
        if (k - g).abs() <= tol.max(1e-11 * k.abs()) || k.abs() < 1e-290 || depth == 0 {
            return k;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, 0.5 * tol, depth - 1) + go(f, m, b, 0.5 * tol, depth - 1)
    }
    go(f, a, b, tol, 40)
}

/// `∫₀¹ t^k exp(-λ (t - t₀)²) dt`.
pub fn range_integral_quadrature(lambda: f64, t0: f64, k: i32) -> f64 {
    let f = move |t: f64| t.powi(k) * (-lambda * (t - t0) * (t - t0)).exp();
    // Split at the peak so narrow kernels are resolved from the start.
    if t0 > 0.0 && t0 < 1.0 {
        integrate(&f, 0.0, t0, 1e-15) + integrate(&f, t0, 1.0, 1e-15)
    } else {
        integrate(&f, 0.0, 1.0, 1e-15)
    }
}

/// Same integral to a relative tolerance, for values far below 1.
#[allow(dead_code)]
pub fn range_integral_quadrature_rel(lambda: f64, t0: f64, k: i32) -> f64 {
    let rough = range_integral_quadrature(lambda, t0, k);
    let f = move |t: f64| t.powi(k) * (-lambda * (t - t0) * (t - t0)).exp();
    integrate(&f, 0.0, 1.0, 1e-14 * rough)
}

pub fn max_abs_diff(a: &GrayImage, b: &GrayImage) -> f64 {
    assert_eq!(a.dimensions(), b.dimensions());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Step between 0.3 and 0.7 at the middle column plus a fine sinusoidal
/// texture of the given amplitude and period.
pub fn step_plus_texture(w: usize, h: usize, amp: f64, period: f64) -> GrayImage {
    let tau = std::f64::consts::TAU;
    Plane::from_fn(w, h, |x, y| {
        let base = if x < w / 2 { 0.3 } else { 0.7 };
        base + amp * (tau * x as f64 / period).sin() * (tau * y as f64 / period).sin()
    })
}
