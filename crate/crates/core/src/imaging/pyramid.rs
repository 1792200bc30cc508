use serde::{Deserialize, Serialize};

use super::{gaussian_blur, ImageF};
use crate::error::{invalid_input, invalid_param, Result};

/// Shape of a center/surround pyramid pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PyramidParams {
    pub sigma_center: f64,
    pub sigma_surround: f64,
    pub octaves: usize,
    pub scales_per_octave: usize,
}

impl Default for PyramidParams {
    fn default() -> Self {
        Self {
            sigma_center: 2.0,
            sigma_surround: 10.0,
            octaves: 4,
            scales_per_octave: 2,
        }
    }
}

impl PyramidParams {
    pub fn validate(&self) -> Result<()> {
        if self.octaves < 1 || self.scales_per_octave < 1 {
            return Err(invalid_param("octaves and scales_per_octave must be >= 1"));
        }
        if !(self.sigma_center > 0.0) || !(self.sigma_surround > self.sigma_center) {
            return Err(invalid_param("sigmas must satisfy 0 < sigma_center < sigma_surround"));
        }
        Ok(())
    }

    /// Smallest width/height the pyramid accepts.
    pub fn min_size(&self) -> usize {
        1usize << self.octaves.min(usize::BITS as usize - 1)
    }
}

/// Paired Gaussian pyramids; level `i` of `center` and `surround` share dimensions.
#[derive(Debug, Clone)]
pub struct TwinPyramid {
    pub center_levels: Vec<ImageF>,
    pub surround_levels: Vec<ImageF>,
    pub sigma_center: f64,
    pub sigma_surround: f64,
    pub octaves: usize,
    pub scales_per_octave: usize,
}

impl TwinPyramid {
    pub fn levels(&self) -> impl Iterator<Item = (&ImageF, &ImageF)> {
        self.center_levels.iter().zip(&self.surround_levels)
    }
}

/// Builds center and surround pyramids from a single-channel image.
///
/// Within octave `o` scale `s` uses `σ·2^(s/S)` on the octave base. The next
/// octave base is the 2×2 box mean of the current octave's first center level.
pub fn build_twin_pyramid(ch: &ImageF, params: &PyramidParams) -> Result<TwinPyramid> {
    params.validate()?;
    if ch.channels() != 1 {
        return Err(invalid_input("twin pyramid expects a single-channel image"));
    }
    let min = params.min_size();
    if ch.width() < min || ch.height() < min {
        return Err(invalid_param(format!(
            "image {}x{} smaller than 2^octaves = {min}",
            ch.width(),
            ch.height()
        )));
    }
    let s_count = params.scales_per_octave;
    let mut center_levels = Vec::with_capacity(params.octaves * s_count);
    let mut surround_levels = Vec::with_capacity(params.octaves * s_count);
    let mut base = ch.clone();
    for o in 0..params.octaves {
        let mut first_center = None;
        for s in 0..s_count {
            let factor = 2f64.powf(s as f64 / s_count as f64);
            let c = gaussian_blur(&base, params.sigma_center * factor)?;
            let sur = gaussian_blur(&base, params.sigma_surround * factor)?;
            if s == 0 {
                first_center = Some(c.clone());
            }
            center_levels.push(c);
            surround_levels.push(sur);
        }
        if o + 1 < params.octaves {
            base = downsample_box2(first_center.as_ref().expect("at least one scale"));
        }
    }
    Ok(TwinPyramid {
        center_levels,
        surround_levels,
        sigma_center: params.sigma_center,
        sigma_surround: params.sigma_surround,
        octaves: params.octaves,
        scales_per_octave: s_count,
    })
}

/// Halves each dimension by averaging 2×2 blocks; an odd trailing row or column is dropped.
pub fn downsample_box2(img: &ImageF) -> ImageF {
    let (w, h) = img.dims();
    let (nw, nh) = ((w / 2).max(1), (h / 2).max(1));
    let mut out = ImageF::new(nw, nh, img.channels());
    for c in 0..img.channels() {
        let src = img.plane(c);
        let dst = out.plane_mut(c);
        for y in 0..nh {
            let (y0, y1) = (2 * y, (2 * y + 1).min(h - 1));
            for x in 0..nw {
                let (x0, x1) = (2 * x, (2 * x + 1).min(w - 1));
                let sum = src[y0 * w + x0] as f64
                    + src[y0 * w + x1] as f64
                    + src[y1 * w + x0] as f64
                    + src[y1 * w + x1] as f64;
                dst[y * nw + x] = (sum * 0.25) as f32;
            }
        }
    }
    out
}

/// Bilinear resize with pixel-centre alignment and clamped borders.
pub fn resize_bilinear(img: &ImageF, width: usize, height: usize) -> ImageF {
    let (w, h) = img.dims();
    if (w, h) == (width, height) {
        return img.clone();
    }
    let sx = w as f64 / width as f64;
    let sy = h as f64 / height as f64;
    let xs: Vec<(usize, usize, f64)> = (0..width).map(|x| taps((x as f64 + 0.5) * sx - 0.5, w)).collect();
    let ys: Vec<(usize, usize, f64)> = (0..height).map(|y| taps((y as f64 + 0.5) * sy - 0.5, h)).collect();
    let mut out = ImageF::new(width, height, img.channels());
    for c in 0..img.channels() {
        let src = img.plane(c);
        let dst = out.plane_mut(c);
        for (y, &(y0, y1, ty)) in ys.iter().enumerate() {
            for (x, &(x0, x1, tx)) in xs.iter().enumerate() {
                let a = src[y0 * w + x0] as f64 * (1.0 - tx) + src[y0 * w + x1] as f64 * tx;
                let b = src[y1 * w + x0] as f64 * (1.0 - tx) + src[y1 * w + x1] as f64 * tx;
                dst[y * width + x] = (a * (1.0 - ty) + b * ty) as f32;
            }
        }
    }
    out
}

fn taps(pos: f64, len: usize) -> (usize, usize, f64) {
    let p = pos.clamp(0.0, (len - 1) as f64);
    let i0 = p.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, p - i0 as f64)
}

/// On/off center-surround contrast: `on = max(0, c - s)`, `off = max(0, s - c)`.
pub fn dog_contrast(center: &ImageF, surround: &ImageF) -> Result<(ImageF, ImageF)> {
    if !center.same_shape(surround) {
        return Err(invalid_input(format!(
            "center {:?} and surround {:?} differ in shape",
            center.dims(),
            surround.dims()
        )));
    }
    let on = ImageF::from_vec(
        center.width(),
        center.height(),
        center.channels(),
        center
            .data()
            .iter()
            .zip(surround.data())
            .map(|(&c, &s)| (c - s).max(0.0))
            .collect(),
    )?;
    let off = ImageF::from_vec(
        center.width(),
        center.height(),
        center.channels(),
        center
            .data()
            .iter()
            .zip(surround.data())
            .map(|(&c, &s)| (s - c).max(0.0))
            .collect(),
    )?;
    Ok((on, off))
}
