use rayon::prelude::*;

use super::{GraspType, ProbabilityMaps};
use crate::error::{invalid_param, Error, Result};
use crate::saliency::Roi;

const MAX_ITERS: usize = 100;
const CONVERGED_STEP: f64 = 0.1;

/// A converged mean-shift mode in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub position: [f64; 2],
    /// Bilinear sample of the probability channel at `position`.
    pub value: f64,
}

struct Field<'a> {
    plane: &'a [f32],
    width: usize,
    roi: &'a Roi,
}

impl Field<'_> {
    fn step(&self, pos: [f64; 2], bandwidth: f64) -> [f64; 2] {
        let r = self.roi;
        let b2 = bandwidth * bandwidth;
        let x0 = ((pos[0] - bandwidth).ceil().max(r.x as f64)) as usize;
        let x1 = ((pos[0] + bandwidth).floor().min((r.x + r.w - 1) as f64)) as isize;
        let y0 = ((pos[1] - bandwidth).ceil().max(r.y as f64)) as usize;
        let y1 = ((pos[1] + bandwidth).floor().min((r.y + r.h - 1) as f64)) as isize;
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for y in y0 as isize..=y1 {
            let y = y as usize;
            let dy = y as f64 - pos[1];
            for x in x0 as isize..=x1 {
                let x = x as usize;
                let dx = x as f64 - pos[0];
                if dx * dx + dy * dy > b2 || !r.contains(x, y) {
                    continue;
                }
                let wgt = self.plane[y * self.width + x] as f64;
                if wgt > 0.0 {
                    sw += wgt;
                    sx += wgt * x as f64;
                    sy += wgt * y as f64;
                }
            }
        }
        if sw > 0.0 {
            [sx / sw, sy / sw]
        } else {
            pos
        }
    }
}

/// One weighted mean-shift update with a flat circular kernel restricted to the region.
pub fn mean_shift_step(p: &ProbabilityMaps, s: GraspType, roi: &Roi, bandwidth: f64, pos: [f64; 2]) -> [f64; 2] {
    Field {
        plane: p.plane(s),
        width: p.width(),
        roi,
    }
    .step(pos, bandwidth)
}

/// Mode seeking on channel `s` inside `roi`.
///
/// Every region pixel with probability `>= activation` (and above zero) seeds a
/// trajectory. A trajectory stops at the first position whose next update is
/// shorter than 0.1 px, or after 100 updates. Modes closer than `bandwidth / 2`
/// are merged, keeping the one with the higher probability.
pub fn mean_shift_modes(
    p: &ProbabilityMaps,
    s: GraspType,
    roi: &Roi,
    bandwidth: f64,
    activation: f64,
) -> Result<Vec<Mode>> {
    if !(bandwidth > 0.0) {
        return Err(invalid_param("bandwidth must be > 0"));
    }
    if !(0.0..1.0).contains(&activation) {
        return Err(invalid_param("activation must lie in [0, 1)"));
    }
    let field = Field {
        plane: p.plane(s),
        width: p.width(),
        roi,
    };
    let seeds: Vec<[f64; 2]> = roi
        .pixels()
        .filter(|&(x, y)| {
            let v = p.at(x, y, s) as f64;
            v >= activation && v > 0.0
        })
        .map(|(x, y)| [x as f64, y as f64])
        .collect();

    let mut converged: Vec<Mode> = seeds
        .par_iter()
        .map(|&seed| {
            let mut pos = seed;
            for _ in 0..MAX_ITERS {
                let next = field.step(pos, bandwidth);
                if (next[0] - pos[0]).hypot(next[1] - pos[1]) < CONVERGED_STEP {
                    break;
                }
                pos = next;
            }
            Mode {
                position: pos,
                value: p.image().sample_bilinear(pos[0], pos[1], s.channel()),
            }
        })
        .collect();

    converged.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then(a.position[1].total_cmp(&b.position[1]))
            .then(a.position[0].total_cmp(&b.position[0]))
    });
    let merge_radius = bandwidth / 2.0;
    let mut modes: Vec<Mode> = Vec::new();
    for m in converged {
        let close = modes
            .iter()
            .any(|k| (k.position[0] - m.position[0]).hypot(k.position[1] - m.position[1]) < merge_radius);
        if !close {
            modes.push(m);
        }
    }
    Ok(modes)
}

/// Picks the mode with the highest probability. Ties go to the mode nearest
/// the region centre, then to the first in row-major order.
pub fn select_point(modes: &[Mode], roi: &Roi) -> Result<Mode> {
    let (cx, cy) = roi.center();
    modes
        .iter()
        .copied()
        .min_by(|a, b| {
            let da = (a.position[0] - cx).hypot(a.position[1] - cy);
            let db = (b.position[0] - cx).hypot(b.position[1] - cy);
            b.value
                .total_cmp(&a.value)
                .then(da.total_cmp(&db))
                .then(a.position[1].total_cmp(&b.position[1]))
                .then(a.position[0].total_cmp(&b.position[0]))
        })
        .ok_or(Error::NoGraspPoint)
}
