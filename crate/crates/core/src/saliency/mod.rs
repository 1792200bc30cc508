//! Bottom-up saliency: opponent channels, twin-pyramid DoG contrast and
//! arithmetic-mean fusion into a pixel-precise map.

mod roi;

pub use roi::{extract_rois, Roi};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Result};
use crate::imaging::{build_twin_pyramid, dog_contrast, resize_bilinear, to_opponent, ImageF, PyramidParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaliencyParams {
    pub pyramid: PyramidParams,
    pub max_rois: usize,
    pub grow_fraction: f64,
}

impl Default for SaliencyParams {
    fn default() -> Self {
        Self {
            pyramid: PyramidParams::default(),
            max_rois: 5,
            grow_fraction: 0.5,
        }
    }
}

impl SaliencyParams {
    pub fn validate(&self) -> Result<()> {
        self.pyramid.validate()?;
        if self.max_rois < 1 {
            return Err(invalid_param("max_rois must be >= 1"));
        }
        if !(self.grow_fraction > 0.0 && self.grow_fraction < 1.0) {
            return Err(invalid_param("grow_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// Single-channel saliency in `[0, 1]` at input resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub map: ImageF,
}

impl SaliencyMap {
    pub fn width(&self) -> usize {
        self.map.width()
    }

    pub fn height(&self) -> usize {
        self.map.height()
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f32 {
        self.map.get(x, y, 0)
    }
}

/// Computes the saliency map of an RGB image.
///
/// Each opponent channel is decomposed into a twin pyramid; every level yields
/// an on and an off DoG map which is upsampled to input size. Maps are averaged
/// per channel, the three channel maps are averaged, and the result is divided
/// by its maximum.
pub fn compute_saliency(rgb: &ImageF, params: &PyramidParams) -> Result<SaliencyMap> {
    params.validate()?;
    let min = params.min_size();
    if rgb.width() < min || rgb.height() < min {
        return Err(invalid_param(format!(
            "image {}x{} is smaller than 2^octaves = {min}",
            rgb.width(),
            rgb.height()
        )));
    }
    let opp = to_opponent(rgb)?;
    let (w, h) = rgb.dims();
    let channel_maps = opp
        .channels()
        .into_par_iter()
        .map(|ch| channel_conspicuity(ch, params, w, h))
        .collect::<Result<Vec<_>>>()?;

    let n = w * h;
    let mut fused = vec![0f64; n];
    for m in &channel_maps {
        for (f, &v) in fused.iter_mut().zip(m) {
            *f += v / channel_maps.len() as f64;
        }
    }
    let max = fused.iter().copied().fold(0.0, f64::max);
    let data = if max > 0.0 {
        fused.iter().map(|&v| (v / max) as f32).collect()
    } else {
        vec![0.0; n]
    };
    Ok(SaliencyMap {
        map: ImageF::from_vec(w, h, 1, data)?,
    })
}

fn channel_conspicuity(ch: &ImageF, params: &PyramidParams, w: usize, h: usize) -> Result<Vec<f64>> {
    let pyr = build_twin_pyramid(ch, params)?;
    let mut acc = vec![0f64; w * h];
    let mut count = 0usize;
    for (c, s) in pyr.levels() {
        let (on, off) = dog_contrast(c, s)?;
        for m in [on, off] {
            let up = resize_bilinear(&m, w, h);
            for (a, &v) in acc.iter_mut().zip(up.data()) {
                *a += v as f64;
            }
            count += 1;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(acc)
}
