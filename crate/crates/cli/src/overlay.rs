//! Drawing of detection overlays onto RGB rasters.

use attgrasp::detect::{GraspType, ProbabilityMaps};
use attgrasp::imaging::ImageF;

pub const RED: [f32; 3] = [1.0, 0.0, 0.0];
pub const GREEN: [f32; 3] = [0.0, 1.0, 0.0];

fn put(img: &mut ImageF, x: i64, y: i64, color: [f32; 3]) {
    if x < 0 || y < 0 || x >= img.width() as i64 || y >= img.height() as i64 {
        return;
    }
    for (c, v) in color.into_iter().enumerate() {
        img.set(x as usize, y as usize, c, v);
    }
}

/// One-pixel rectangle outline, clipped to the image.
pub fn rectangle(img: &mut ImageF, x: usize, y: usize, w: usize, h: usize, color: [f32; 3]) {
    if w == 0 || h == 0 {
        return;
    }
    let (x0, y0) = (x as i64, y as i64);
    let (x1, y1) = (x0 + w as i64 - 1, y0 + h as i64 - 1);
    for px in x0..=x1 {
        put(img, px, y0, color);
        put(img, px, y1, color);
    }
    for py in y0..=y1 {
        put(img, x0, py, color);
        put(img, x1, py, color);
    }
}

/// Plus-shaped marker centred on the nearest pixel to `point`.
pub fn cross(img: &mut ImageF, point: [f64; 2], arm: i64, color: [f32; 3]) {
    let (cx, cy) = (point[0].round() as i64, point[1].round() as i64);
    for d in -arm..=arm {
        put(img, cx + d, cy, color);
        put(img, cx, cy + d, color);
    }
}

/// Grey backdrop from the per-pixel maximum type probability, for when no
/// photograph is available.
pub fn max_probability(maps: &ProbabilityMaps) -> ImageF {
    ImageF::from_fn(maps.width(), maps.height(), 3, |x, y, _| {
        GraspType::ALL.into_iter().map(|s| maps.at(x, y, s)).fold(0.0, f32::max)
    })
}
