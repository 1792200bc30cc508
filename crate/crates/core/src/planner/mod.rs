//! Pre-grasp construction, local 4-DoF search, quasi-static grasp simulation
//! and ranking, plus an uninformed random-sampling baseline.

mod hand;
mod search;
mod sim;
mod wrench;

pub use hand::{fingers_for_type, HandKind, HandModel};
pub use search::{
    hand_pose, make_pregrasp, palm_x_for_normal, sample_candidates, weighted_norm2, PreGrasp, SearchPoint, SearchSpace,
};
pub use sim::{execute_candidate, quality};
pub use wrench::{
    can_resist, cone_wrenches, contact_tangents, epsilon_quality, hull_inradius, tangent_basis, FrictionModel,
};

use nalgebra::{Point3, Rotation3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{GraspInfo, GraspType};
use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::scene::{CameraModel, HitTarget, Scene, SurfacePoint};

/// A finger or palm contact on the target object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub position: Point3<f64>,
    /// Outward unit surface normal.
    pub normal: Vector3<f64>,
    /// Unit direction of the force the hand applies.
    pub force_dir: Vector3<f64>,
    /// Newtons.
    pub normal_force: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    TableCollision,
    /// The hand intersects an object before closing.
    ObjectCollision,
    NoContact,
    NotForceClosure,
    DropsUnderGravity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraspOutcome {
    pub feasible: bool,
    pub contacts: Vec<Contact>,
    pub quality: f64,
    pub failure: Option<FailureReason>,
    pub palm_center: Point3<f64>,
    /// Columns are the palm x, y and approach axes.
    pub palm_rotation: Rotation3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    pub search: SearchSpace,
    pub max_attempts: usize,
    /// Palm standoff `d0`; `None` uses the hand's default.
    pub standoff: Option<f64>,
    pub friction: FrictionModel,
    /// Weight of the ε-metric in the quality blend.
    pub quality_lambda: f64,
    /// Minimum height of any hand point above the table, metres.
    pub table_clearance: f64,
    /// Finger and palm motion step, metres.
    pub step: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self {
            search: SearchSpace::default(),
            max_attempts: 40,
            standoff: None,
            friction: FrictionModel::default(),
            quality_lambda: 0.5,
            table_clearance: 0.002,
            step: 0.001,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        self.friction.validate()?;
        if self.max_attempts < 1 {
            return Err(invalid_param("max_attempts must be >= 1"));
        }
        if let Some(d0) = self.standoff {
            if !(d0 > 0.0) {
                return Err(invalid_param("standoff must be > 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.quality_lambda) {
            return Err(invalid_param("quality_lambda must lie in [0, 1]"));
        }
        if !(self.step > 0.0) || !(self.table_clearance >= 0.0) {
            return Err(invalid_param("step must be > 0 and table_clearance >= 0"));
        }
        Ok(())
    }

    pub fn standoff_for(&self, hand: &HandModel, s: GraspType) -> f64 {
        self.standoff.unwrap_or_else(|| hand.default_standoff(s))
    }
}

/// One executed candidate with its position in the search order.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResult {
    pub index: usize,
    pub search_point: SearchPoint,
    pub outcome: GraspOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub grasp_type: GraspType,
    pub pregrasp: PreGrasp,
    pub best: CandidateResult,
    /// One-based index of the first feasible candidate.
    pub attempts_used: usize,
    pub candidates: Vec<CandidateResult>,
}

/// Lifts an image point onto the surface of the object its ray hits first.
pub fn lift_to_surface(scene: &Scene, camera: &CameraModel, pixel: [f64; 2]) -> Result<SurfacePoint> {
    let (o, d) = camera.ray(pixel[0], pixel[1]);
    match scene.cast(&o, &d) {
        Some(hit) if matches!(hit.target, HitTarget::Object(_)) => scene.surface_normal(&(o + d * hit.t)),
        _ => Err(Error::NoSurface),
    }
}

/// Runs every candidate of the local search around `sp` and ranks them.
pub fn plan_at(
    scene: &Scene,
    sp: &SurfacePoint,
    grasp_type: GraspType,
    hand: &HandModel,
    params: &PlannerParams,
) -> Result<PlanResult> {
    params.validate()?;
    hand.validate()?;
    let pg = make_pregrasp(sp, grasp_type, hand, params.standoff_for(hand, grasp_type))?;
    let points = sample_candidates(&pg, &params.search, params.max_attempts)?;
    let candidates = points
        .par_iter()
        .enumerate()
        .map(|(index, point)| {
            Ok(CandidateResult {
                index,
                search_point: *point,
                outcome: execute_candidate(scene, hand, &pg, point, params)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let Some(first) = candidates.iter().position(|c| c.outcome.feasible) else {
        return Err(Error::PlanningFailed {
            attempts: candidates.len(),
        });
    };
    let best = candidates
        .iter()
        .filter(|c| c.outcome.feasible)
        .fold(None::<&CandidateResult>, |acc, c| match acc {
            Some(b) if b.outcome.quality >= c.outcome.quality => Some(b),
            _ => Some(c),
        })
        .expect("at least one feasible candidate")
        .clone();
    Ok(PlanResult {
        grasp_type,
        pregrasp: pg,
        best,
        attempts_used: first + 1,
        candidates,
    })
}

/// Plans a grasp from a detection: lift the grasp point, build the pre-grasp
/// for the detected type, search and rank.
pub fn plan(
    scene: &Scene,
    camera: &CameraModel,
    info: &GraspInfo,
    hand: &HandModel,
    params: &PlannerParams,
) -> Result<PlanResult> {
    let sp = lift_to_surface(scene, camera, info.point)?;
    plan_at(scene, &sp, info.grasp_type, hand, params)
}

/// Uninformed baseline: surface points drawn uniformly by area on the target,
/// each tried once at the nominal pre-grasp with a power grasp, until one is
/// feasible. Deterministic for a given seed.
pub fn random_baseline(
    scene: &Scene,
    target_id: &str,
    hand: &HandModel,
    params: &PlannerParams,
    seed: u64,
) -> Result<PlanResult> {
    params.validate()?;
    hand.validate()?;
    let target = scene
        .object(target_id)
        .ok_or_else(|| invalid_input(format!("no object {target_id:?} in scene")))?;
    let d0 = params.standoff_for(hand, GraspType::Power);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates = Vec::new();
    for index in 0..params.max_attempts {
        let (position, normal) = target.sample_surface(&mut rng);
        let sp = SurfacePoint {
            position,
            normal,
            object_id: target.id.clone(),
        };
        let pg = make_pregrasp(&sp, GraspType::Power, hand, d0)?;
        let point = SearchPoint::nominal(d0);
        let outcome = execute_candidate(scene, hand, &pg, &point, params)?;
        let feasible = outcome.feasible;
        let result = CandidateResult {
            index,
            search_point: point,
            outcome,
        };
        candidates.push(result.clone());
        if feasible {
            return Ok(PlanResult {
                grasp_type: GraspType::Power,
                pregrasp: pg,
                best: result,
                attempts_used: index + 1,
                candidates,
            });
        }
    }
    Err(Error::PlanningFailed {
        attempts: params.max_attempts,
    })
}
