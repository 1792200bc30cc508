//! PNG and binary PGM/PPM input/output.
//!
//! Floats are mapped to 8 bits by clamping to `[0, 1]` and rounding to nearest.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, GrayImage, ImageEncoder, ImageFormat, RgbImage};

use super::ImageF;
use crate::error::{invalid_input, Result};

pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Reads any supported image as a 3-channel RGB raster in `[0, 1]`.
pub fn read_rgb(path: impl AsRef<Path>) -> Result<ImageF> {
    let img = image::open(path.as_ref())?.to_rgb8();
    Ok(from_rgb8(&img))
}

pub fn from_rgb8(img: &RgbImage) -> ImageF {
    let (w, h) = (img.width() as usize, img.height() as usize);
    ImageF::from_fn(w, h, 3, |x, y, c| img.get_pixel(x as u32, y as u32)[c] as f32 / 255.0)
}

pub fn to_dynamic(img: &ImageF) -> Result<DynamicImage> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    match img.channels() {
        1 => Ok(DynamicImage::ImageLuma8(GrayImage::from_fn(w, h, |x, y| {
            image::Luma([to_u8(img.get(x as usize, y as usize, 0))])
        }))),
        3 => Ok(DynamicImage::ImageRgb8(RgbImage::from_fn(w, h, |x, y| {
            let (x, y) = (x as usize, y as usize);
            image::Rgb([
                to_u8(img.get(x, y, 0)),
                to_u8(img.get(x, y, 1)),
                to_u8(img.get(x, y, 2)),
            ])
        }))),
        n => Err(invalid_input(format!("cannot encode {n}-channel image"))),
    }
}

/// Writes a 1- or 3-channel image; `.pgm`/`.ppm`/`.pnm` use binary PNM, anything else PNG.
pub fn write_image(img: &ImageF, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let dynamic = to_dynamic(img)?;
    if matches!(ext.as_str(), "pgm" | "ppm" | "pnm") {
        let (subtype, color) = if img.channels() == 1 {
            (PnmSubtype::Graymap(SampleEncoding::Binary), ExtendedColorType::L8)
        } else {
            (PnmSubtype::Pixmap(SampleEncoding::Binary), ExtendedColorType::Rgb8)
        };
        let out = BufWriter::new(File::create(path)?);
        PnmEncoder::new(out).with_subtype(subtype).write_image(
            dynamic.as_bytes(),
            dynamic.width(),
            dynamic.height(),
            color,
        )?;
    } else {
        dynamic.save_with_format(path, ImageFormat::Png)?;
    }
    Ok(())
}
