//! Float rasters and the filtering primitives the saliency model is built on.

mod blur;
pub mod io;
mod opponent;
mod pyramid;

pub use blur::{gaussian_blur, gaussian_kernel};
pub use opponent::{to_opponent, OpponentImage};
pub use pyramid::{build_twin_pyramid, dog_contrast, downsample_box2, resize_bilinear, PyramidParams, TwinPyramid};

use crate::error::{invalid_input, Result};

/// Multi-channel `f32` raster, channel-planar and row-major.
///
/// Pixel `(x, y)` of channel `c` lives at `data[c * w * h + y * w + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageF {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self::filled(width, height, channels, 0.0)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    pub fn from_vec(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * channels {
            return Err(invalid_input(format!(
                "data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid_input("image contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y, c)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            data,
        }
    }

    /// Stacks single-channel planes into one image.
    pub fn stack(planes: &[&ImageF]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| invalid_input("cannot stack zero planes"))?;
        let (w, h) = first.dims();
        let mut data = Vec::with_capacity(w * h * planes.len());
        for p in planes {
            if p.dims() != (w, h) || p.channels != 1 {
                return Err(invalid_input("stacked planes must be single-channel and equal size"));
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Self {
            width: w,
            height: h,
            channels: planes.len(),
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    fn index(&self, x: usize, y: usize, c: usize) -> usize {
        debug_assert!(x < self.width && y < self.height && c < self.channels);
        c * self.width * self.height + y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let i = self.index(x, y, c);
        self.data[i] = v;
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.width * self.height;
        &mut self.data[c * n..(c + 1) * n]
    }

    /// Copies channel `c` out as a single-channel image.
    pub fn channel(&self, c: usize) -> ImageF {
        ImageF {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.plane(c).to_vec(),
        }
    }

    /// Bilinear sample of channel `c` at continuous pixel coordinates, where
    /// integer coordinates are pixel centres. Samples outside clamp to the border.
    pub fn sample_bilinear(&self, x: f64, y: f64, c: usize) -> f64 {
        let xf = x.clamp(0.0, (self.width - 1) as f64);
        let yf = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = xf.floor() as usize;
        let y0 = yf.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let tx = xf - x0 as f64;
        let ty = yf - y0 as f64;
        let p = self.plane(c);
        let w = self.width;
        let a = p[y0 * w + x0] as f64 * (1.0 - tx) + p[y0 * w + x1] as f64 * tx;
        let b = p[y1 * w + x0] as f64 * (1.0 - tx) + p[y1 * w + x1] as f64 * tx;
        a * (1.0 - ty) + b * ty
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn min_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> ImageF {
        ImageF {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    pub fn same_shape(&self, other: &ImageF) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}
