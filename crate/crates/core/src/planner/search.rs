use nalgebra::{Matrix3, Point3, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use super::hand::{fingers_for_type, HandModel};
use crate::detect::GraspType;
use crate::error::{invalid_param, Result};
use crate::scene::SurfacePoint;

/// Initial hand placement derived from a surface point and a grasp type.
#[derive(Debug, Clone, PartialEq)]
pub struct PreGrasp {
    /// Palm centre `p_h`.
    pub palm_center: Point3<f64>,
    /// Unit approach direction, the negated surface normal.
    pub approach: Unit<Vector3<f64>>,
    /// Unit palm x axis, perpendicular to `approach`.
    pub palm_x: Unit<Vector3<f64>>,
    pub standoff: f64,
    pub grasp_type: GraspType,
    pub active_fingers: usize,
    /// Lifted grasp point `p_o'` on the object.
    pub target_point: Point3<f64>,
    pub object_id: String,
}

/// Palm x axis for a surface normal: `n × ẑ`, or `n × x̂` when the normal is
/// (nearly) vertical.
pub fn palm_x_for_normal(n: &Vector3<f64>) -> Unit<Vector3<f64>> {
    let c = n.cross(&Vector3::z());
    if c.norm() >= 1e-6 {
        Unit::new_normalize(c)
    } else {
        Unit::new_normalize(n.cross(&Vector3::x()))
    }
}

pub fn make_pregrasp(sp: &SurfacePoint, s: GraspType, hand: &HandModel, d0: f64) -> Result<PreGrasp> {
    if !(d0 > 0.0) {
        return Err(invalid_param("standoff d0 must be > 0"));
    }
    let n = sp.normal.into_inner();
    Ok(PreGrasp {
        palm_center: sp.position + n * d0,
        approach: Unit::new_unchecked(-n),
        palm_x: palm_x_for_normal(&n),
        standoff: d0,
        grasp_type: s,
        active_fingers: fingers_for_type(s, hand),
        target_point: sp.position,
        object_id: sp.object_id.clone(),
    })
}

/// One point of the local search space: palm distance along the approach and
/// rotations about the hand's x, y and z axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub d: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl SearchPoint {
    pub fn nominal(d0: f64) -> Self {
        Self {
            d: d0,
            alpha: 0.0,
            beta: 0.0,
            gamma: 0.0,
        }
    }
}

/// Grid over the search space, centred on the nominal pre-grasp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub d_step: f64,
    /// Half-range of `d` around `d0`.
    pub d_range: f64,
    pub angle_step: f64,
    /// Half-range of each angle.
    pub angle_max: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            d_step: 0.01,
            d_range: 0.04,
            angle_step: 0.175,
            angle_max: 0.35,
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_step > 0.0 && self.angle_step > 0.0) {
            return Err(invalid_param("search steps must be > 0"));
        }
        if !(self.d_range >= 0.0 && self.angle_max >= 0.0) {
            return Err(invalid_param("search ranges must be >= 0"));
        }
        Ok(())
    }

    fn d_cells(&self) -> i64 {
        (self.d_range / self.d_step + 1e-9).floor() as i64
    }

    fn angle_cells(&self) -> i64 {
        (self.angle_max / self.angle_step + 1e-9).floor() as i64
    }

    pub fn grid_size(&self) -> usize {
        let (nd, na) = (2 * self.d_cells() + 1, 2 * self.angle_cells() + 1);
        (nd * na * na * na) as usize
    }
}

/// Deterministic outward spiral over the grid: the nominal point first, then
/// grid points by increasing step-weighted norm (ties by grid index,
/// lexicographically). Grid points with `d <= 0` are skipped.
pub fn sample_candidates(pg: &PreGrasp, space: &SearchSpace, max_attempts: usize) -> Result<Vec<SearchPoint>> {
    space.validate()?;
    if max_attempts < 1 {
        return Err(invalid_param("max_attempts must be >= 1"));
    }
    let (nd, na) = (space.d_cells(), space.angle_cells());
    let mut cells: Vec<(i64, [i64; 4])> = Vec::with_capacity(space.grid_size());
    for id in -nd..=nd {
        for ia in -na..=na {
            for ib in -na..=na {
                for ig in -na..=na {
                    let idx = [id, ia, ib, ig];
                    cells.push((idx.iter().map(|v| v * v).sum(), idx));
                }
            }
        }
    }
    cells.sort();
    Ok(cells
        .into_iter()
        .map(|(_, [id, ia, ib, ig])| SearchPoint {
            d: pg.standoff + id as f64 * space.d_step,
            alpha: ia as f64 * space.angle_step,
            beta: ib as f64 * space.angle_step,
            gamma: ig as f64 * space.angle_step,
        })
        .filter(|sp| sp.d > 0.0)
        .take(max_attempts)
        .collect())
}

/// Squared step-weighted norm of a search point's offset from nominal.
pub fn weighted_norm2(sp: &SearchPoint, d0: f64, space: &SearchSpace) -> f64 {
    ((sp.d - d0) / space.d_step).powi(2)
        + (sp.alpha / space.angle_step).powi(2)
        + (sp.beta / space.angle_step).powi(2)
        + (sp.gamma / space.angle_step).powi(2)
}

/// Palm pose for a candidate: the pre-grasp frame rotated about its own x, y
/// and z axes, with the palm centre `d` back from the grasp point along the
/// rotated approach. Returns `(rotation with columns [x, y, approach], palm centre)`.
pub fn hand_pose(pg: &PreGrasp, sp: &SearchPoint) -> (Rotation3<f64>, Point3<f64>) {
    let x = pg.palm_x.into_inner();
    let z = pg.approach.into_inner();
    let y = z.cross(&x);
    let base = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
    let local = Rotation3::from_axis_angle(&Vector3::x_axis(), sp.alpha)
        * Rotation3::from_axis_angle(&Vector3::y_axis(), sp.beta)
        * Rotation3::from_axis_angle(&Vector3::z_axis(), sp.gamma);
    let r = base * local;
    let approach = r * Vector3::z();
    (r, pg.target_point - approach * sp.d)
}
