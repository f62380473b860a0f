//! Reading and writing 8-bit images.
//!
//! Supported: binary PGM (`P5`), binary PPM (`P6`), and 8-bit gray or RGB PNG.
//! The format is chosen from the file extension. Samples map to `[0, 1]` by
//! division by 255; writing clamps to `[0, 1]` and rounds half-up.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ColorType, ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};

use crate::error::{Error, Result};
use crate::image::{ColorImage, GrayImage, Image, Plane};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum FileKind {
    Pgm,
    Ppm,
    Png,
}

fn file_kind(path: &Path) -> Result<FileKind> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" => Ok(FileKind::Pgm),
        "ppm" => Ok(FileKind::Ppm),
        "png" => Ok(FileKind::Png),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: expected a .pgm, .ppm or .png extension",
            path.display()
        ))),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Converts an 8-bit sample to an intensity on `[0, 1]`.
#[inline]
pub fn sample_to_intensity(s: u8) -> f64 {
    f64::from(s) / 255.0
}

/// Converts an intensity to an 8-bit sample: clamp, scale by 255, round half-up.
#[inline]
pub fn intensity_to_sample(v: f64) -> u8 {
    // NaN clamps to NaN and casts to 0.
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

fn plane_from_samples(width: usize, height: usize, samples: impl Iterator<Item = u8>) -> Plane {
    let data: Vec<f64> = samples.map(sample_to_intensity).collect();
    Plane::new(width, height, data).expect("decoder returned consistent dimensions")
}

/// Loads an image from disk, returning grayscale or color depending on the file.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let kind = file_kind(path)?;

    if matches!(kind, FileKind::Pgm | FileKind::Ppm) {
        let mut magic = [0u8; 2];
        File::open(path)
            .and_then(|mut f| f.read_exact(&mut magic))
            .map_err(io_err(path))?;
        let expected = if kind == FileKind::Pgm { b"P5" } else { b"P6" };
        if &magic != expected {
            return Err(Error::UnsupportedFormat(format!(
                "{}: expected binary {} header, found {:?}",
                path.display(),
                String::from_utf8_lossy(expected),
                String::from_utf8_lossy(&magic)
            )));
        }
    }

    let file = File::open(path).map_err(io_err(path))?;
    let format = if kind == FileKind::Png {
        ImageFormat::Png
    } else {
        ImageFormat::Pnm
    };
    let decoded = ImageReader::with_format(BufReader::new(file), format)
        .decode()
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;

    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded.color() {
        ColorType::L8 => {
            let buf = decoded.into_luma8();
            Ok(Image::Gray(plane_from_samples(w, h, buf.into_raw().into_iter())))
        }
        ColorType::Rgb8 => {
            let raw = decoded.into_rgb8().into_raw();
            let channel = |c: usize| plane_from_samples(w, h, raw.iter().skip(c).step_by(3).copied());
            Ok(Image::Color(ColorImage::new(channel(0), channel(1), channel(2))?))
        }
        other => Err(Error::UnsupportedFormat(format!(
            "{}: only 8-bit grayscale or RGB images are supported, found {other:?}",
            path.display()
        ))),
    }
}

/// Loads an image and converts it to luma if it has color.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    Ok(load_image(path)?.luma())
}

fn gray_samples(g: &GrayImage) -> Vec<u8> {
    g.data().iter().map(|&v| intensity_to_sample(v)).collect()
}

fn rgb_samples(c: &ColorImage) -> Vec<u8> {
    let [r, g, b] = c.channels();
    let mut out = Vec::with_capacity(3 * r.len());
    for ((&r, &g), &b) in r.data().iter().zip(g.data()).zip(b.data()) {
        out.extend([intensity_to_sample(r), intensity_to_sample(g), intensity_to_sample(b)]);
    }
    out
}

/// Writes an image to disk in the format implied by the extension.
///
/// Grayscale images cannot be written as `.ppm` and color images cannot be
/// written as `.pgm`.
pub fn save_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let kind = file_kind(path)?;
    let (w, h) = img.dimensions();
    let (samples, color) = match (img, kind) {
        (Image::Gray(g), FileKind::Pgm | FileKind::Png) => (gray_samples(g), ExtendedColorType::L8),
        (Image::Color(c), FileKind::Ppm | FileKind::Png) => (rgb_samples(c), ExtendedColorType::Rgb8),
        (Image::Gray(_), FileKind::Ppm) => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: cannot write a grayscale image as PPM",
                path.display()
            )))
        }
        (Image::Color(_), FileKind::Pgm) => {
            return Err(Error::UnsupportedFormat(format!(
                "{}: cannot write a color image as PGM",
                path.display()
            )))
        }
    };

    let file = File::create(path).map_err(io_err(path))?;
    let writer = BufWriter::new(file);
    let (w32, h32) = (w as u32, h as u32);
    let result = match kind {
        FileKind::Png => PngEncoder::new(writer).write_image(&samples, w32, h32, color),
        FileKind::Pgm => PnmEncoder::new(writer)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(&samples, w32, h32, color),
        FileKind::Ppm => PnmEncoder::new(writer)
            .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
            .write_image(&samples, w32, h32, color),
    };
    result.map_err(|e| Error::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
