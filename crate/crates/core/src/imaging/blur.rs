use super::ImageF;
use crate::error::{invalid_param, Result};

/// Sampled Gaussian truncated at `ceil(3σ)` and renormalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with replicate borders, applied to every channel.
pub fn gaussian_blur(img: &ImageF, sigma: f64) -> Result<ImageF> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid_param(format!("sigma must be > 0, got {sigma}")));
    }
    let kernel = gaussian_kernel(sigma);
    let (w, h) = img.dims();
    let mut out = ImageF::new(w, h, img.channels());
    let mut tmp = vec![0f64; w * h];
    for c in 0..img.channels() {
        convolve_rows(img.plane(c), &mut tmp, w, h, &kernel);
        convolve_cols(&tmp, out.plane_mut(c), w, h, &kernel);
    }
    Ok(out)
}

fn convolve_rows(src: &[f32], dst: &mut [f64], w: usize, h: usize, kernel: &[f64]) {
    let r = (kernel.len() / 2) as isize;
    let last = w as isize - 1;
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let sx = (x as isize + k as isize - r).clamp(0, last) as usize;
                acc += kv * row[sx] as f64;
            }
            dst[y * w + x] = acc;
        }
    }
}

fn convolve_cols(src: &[f64], dst: &mut [f32], w: usize, h: usize, kernel: &[f64]) {
    let r = (kernel.len() / 2) as isize;
    let last = h as isize - 1;
    let mut acc = vec![0f64; w];
    for y in 0..h {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for (k, &kv) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - r).clamp(0, last) as usize;
            let row = &src[sy * w..(sy + 1) * w];
            for (a, &s) in acc.iter_mut().zip(row) {
                *a += kv * s;
            }
        }
        for (d, &a) in dst[y * w..(y + 1) * w].iter_mut().zip(&acc) {
            *d = a as f32;
        }
    }
}
