use serde::{Deserialize, Serialize};

use super::SaliencyMap;

/// Region of interest: a bounding rectangle plus the pixel mask inside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    /// Row-major over the `w × h` bounds. Empty means the full rectangle.
    #[serde(skip)]
    pub mask: Vec<bool>,
    /// `[x, y]` of the local maximum the region grew from.
    pub seed: [usize; 2],
    pub peak: f32,
}

impl Roi {
    /// Full-rectangle region; the seed is the rectangle's top-left pixel.
    pub fn rect(x: usize, y: usize, w: usize, h: usize) -> Self {
        Self {
            x,
            y,
            w,
            h,
            mask: Vec::new(),
            seed: [x, y],
            peak: 0.0,
        }
    }

    pub fn contains(&self, px: usize, py: usize) -> bool {
        if px < self.x || py < self.y || px >= self.x + self.w || py >= self.y + self.h {
            return false;
        }
        self.mask.is_empty() || self.mask[(py - self.y) * self.w + (px - self.x)]
    }

    pub fn in_bounds(&self, px: f64, py: f64) -> bool {
        px >= self.x as f64
            && py >= self.y as f64
            && px <= (self.x + self.w - 1) as f64
            && py <= (self.y + self.h - 1) as f64
    }

    /// Masked pixels in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y..self.y + self.h)
            .flat_map(move |y| (self.x..self.x + self.w).map(move |x| (x, y)))
            .filter(move |&(x, y)| self.contains(x, y))
    }

    pub fn area(&self) -> usize {
        if self.mask.is_empty() {
            self.w * self.h
        } else {
            self.mask.iter().filter(|&&m| m).count()
        }
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x as f64 + (self.w as f64 - 1.0) / 2.0,
            self.y as f64 + (self.h as f64 - 1.0) / 2.0,
        )
    }
}

/// Seeded region growing over the saliency map.
///
/// Repeatedly takes the global maximum of the remaining map as a seed, grows an
/// 8-connected region of pixels with value `>= grow_fraction × seed value`,
/// emits it and suppresses it. Stops after `max_rois` regions or when nothing
/// positive remains. Ties between equal maxima go to the first pixel in
/// row-major order.
pub fn extract_rois(sal: &SaliencyMap, max_rois: usize, grow_fraction: f64) -> Vec<Roi> {
    let (w, h) = (sal.width(), sal.height());
    let mut work: Vec<f32> = sal.map.data().to_vec();
    let mut rois = Vec::new();
    let mut stack = Vec::new();
    let mut region = Vec::new();
    while rois.len() < max_rois {
        let Some((seed_idx, peak)) =
            work.iter()
                .copied()
                .enumerate()
                .fold(None, |best: Option<(usize, f32)>, (i, v)| match best {
                    Some((_, bv)) if bv >= v => best,
                    _ if v > 0.0 => Some((i, v)),
                    _ => best,
                })
        else {
            break;
        };
        let threshold = (grow_fraction * peak as f64) as f32;
        region.clear();
        stack.push(seed_idx);
        work[seed_idx] = f32::NEG_INFINITY;
        while let Some(i) = stack.pop() {
            region.push(i);
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if work[j] >= threshold && work[j] > 0.0 {
                        work[j] = f32::NEG_INFINITY;
                        stack.push(j);
                    }
                }
            }
        }
        let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
        for &i in &region {
            let (x, y) = (i % w, i / w);
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
        }
        let (rw, rh) = (x1 - x0 + 1, y1 - y0 + 1);
        let mut mask = vec![false; rw * rh];
        for &i in &region {
            mask[(i / w - y0) * rw + (i % w - x0)] = true;
        }
        rois.push(Roi {
            x: x0,
            y: y0,
            w: rw,
            h: rh,
            mask,
            seed: [seed_idx % w, seed_idx / w],
            peak,
        });
    }
    rois
}
