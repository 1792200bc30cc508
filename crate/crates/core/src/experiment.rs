//! End-to-end pipeline (render, saliency, ROI, grasp-type maps, detection,
//! planning) and the desk-suite comparison against the random baseline.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::{
    detect, DetectParams, GraspInfo, ProbabilityMaps, ProbabilityProvider, ProviderRules, SyntheticProvider,
};
use crate::error::{invalid_param, Error, Result};
use crate::imaging::ImageF;
use crate::planner::{plan, random_baseline, HandKind, HandModel, PlanResult, PlannerParams};
use crate::saliency::{compute_saliency, extract_rois, Roi, SaliencyMap, SaliencyParams};
use crate::scene::{render_rgb, CameraModel, PrimitiveObject, Scene, Shape};

/// Parameters of every pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    pub saliency: SaliencyParams,
    pub detect: DetectParams,
    pub provider: ProviderRules,
    pub planner: PlannerParams,
}

impl PipelineParams {
    pub fn validate(&self) -> Result<()> {
        self.saliency.validate()?;
        self.detect.validate()?;
        self.provider.validate()?;
        self.planner.validate()
    }
}

/// Everything the visual front end produces for one view.
#[derive(Debug, Clone)]
pub struct Perception {
    pub rgb: ImageF,
    pub saliency: SaliencyMap,
    pub rois: Vec<Roi>,
    pub maps: ProbabilityMaps,
}

pub fn perceive(
    scene: &Scene,
    camera: &CameraModel,
    provider: &dyn ProbabilityProvider,
    params: &PipelineParams,
) -> Result<Perception> {
    params.saliency.validate()?;
    let rgb = render_rgb(scene, camera);
    let saliency = compute_saliency(&rgb, &params.saliency.pyramid)?;
    let rois = extract_rois(&saliency, params.saliency.max_rois, params.saliency.grow_fraction);
    let maps = provider.predict(scene, camera)?;
    Ok(Perception {
        rgb,
        saliency,
        rois,
        maps,
    })
}

/// Detection in the most salient ROI that contains a grasp point.
pub fn first_detection(perception: &Perception, params: &DetectParams) -> Result<GraspInfo> {
    if perception.rois.is_empty() {
        return Err(Error::NoRoi);
    }
    for roi in &perception.rois {
        match detect(&perception.maps, roi, params) {
            Err(Error::NoGraspPoint) => continue,
            other => return other,
        }
    }
    Err(Error::NoGraspPoint)
}

#[derive(Debug, Clone)]
pub struct InformedRun {
    pub detection: GraspInfo,
    pub plan: PlanResult,
}

/// The informed planner: perceive, detect, then search around the detection.
pub fn run_informed(
    scene: &Scene,
    camera: &CameraModel,
    provider: &dyn ProbabilityProvider,
    hand: &HandModel,
    params: &PipelineParams,
) -> Result<InformedRun> {
    let perception = perceive(scene, camera, provider, params)?;
    let detection = first_detection(&perception, &params.detect)?;
    let plan = plan(scene, camera, &detection, hand, &params.planner)?;
    Ok(InformedRun { detection, plan })
}

/// One object of an experiment suite, resting on the table at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteObject {
    pub name: String,
    /// Shape kind and dimensions as in scene files.
    pub kind: String,
    pub dims: Vec<f64>,
    /// Lay the object's long axis flat instead of upright.
    #[serde(default)]
    pub lying: bool,
    pub color: [f64; 3],
}

impl SuiteObject {
    fn new(name: &str, kind: &str, dims: &[f64], lying: bool, color: [f64; 3]) -> Self {
        Self {
            name: name.into(),
            kind: kind.into(),
            dims: dims.to_vec(),
            lying,
            color,
        }
    }

    pub fn shape(&self) -> Result<Shape> {
        Shape::from_kind(&self.kind, &self.dims).ok_or_else(|| {
            invalid_param(format!(
                "object {:?}: bad shape {} {:?}",
                self.name, self.kind, self.dims
            ))
        })
    }

    /// The object resting on a table at height 0, shifted by `(dx, dy)` and
    /// turned by `yaw` about the vertical.
    pub fn placed(&self, dx: f64, dy: f64, yaw: f64) -> Result<PrimitiveObject> {
        let shape = self.shape()?;
        let tilt = if self.lying { FRAC_PI_2 } else { 0.0 };
        let rot = UnitQuaternion::from_euler_angles(0.0, tilt, yaw);
        let down = rot.inverse_transform_vector(&-Vector3::z());
        let z = support(&shape, &down);
        let pose = Isometry3::from_parts(Translation3::new(dx, dy, z), rot);
        Ok(PrimitiveObject::new(self.name.clone(), shape, pose, self.color))
    }
}

/// Support function of a shape in its local frame: the largest `p · u` over
/// the solid, for unit `u`.
fn support(shape: &Shape, u: &Vector3<f64>) -> f64 {
    match *shape {
        Shape::Sphere { r } => r,
        Shape::Cylinder { r, h } => r * u.x.hypot(u.y) + 0.5 * h * u.z.abs(),
        Shape::Box { sx, sy, sz } => 0.5 * (sx * u.x.abs() + sy * u.y.abs() + sz * u.z.abs()),
        Shape::Capsule { r, l } => r + 0.5 * l * u.z.abs(),
    }
}

/// Six desk objects: small and large cans, a banana-like capsule, two balls and
/// a tall bottle.
pub fn desk_suite() -> Vec<SuiteObject> {
    vec![
        SuiteObject::new("small_cylinder", "cylinder", &[0.025, 0.09], false, [0.85, 0.15, 0.1]),
        SuiteObject::new("large_cylinder", "cylinder", &[0.04, 0.11], false, [0.1, 0.3, 0.85]),
        SuiteObject::new("capsule", "capsule", &[0.015, 0.14], true, [0.95, 0.85, 0.1]),
        SuiteObject::new("small_sphere", "sphere", &[0.032], false, [0.9, 0.45, 0.05]),
        SuiteObject::new("large_sphere", "sphere", &[0.038], false, [0.15, 0.7, 0.2]),
        SuiteObject::new("tall_cylinder", "cylinder", &[0.035, 0.22], false, [0.6, 0.1, 0.7]),
    ]
}

/// Overhead pinhole camera looking down at the table origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSpec {
    /// Metres above the table.
    pub height_m: f64,
    pub width: usize,
    pub height: usize,
    /// Focal length, pixels.
    pub focal: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            height_m: 0.7,
            width: 320,
            height: 240,
            focal: 250.0,
        }
    }
}

impl CameraSpec {
    pub fn camera(&self) -> Result<CameraModel> {
        CameraModel::overhead(self.height_m, self.width, self.height, self.focal)
    }
}

/// Experiment configuration, read from JSON. Missing fields take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub trials: usize,
    pub hand: HandKind,
    pub objects: Vec<SuiteObject>,
    pub camera: CameraSpec,
    pub pipeline: PipelineParams,
    /// Uniform position jitter per trial, ± metres in x and y.
    pub jitter_xy: f64,
    /// Uniform yaw jitter per trial, ± radians.
    pub jitter_yaw: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 2019,
            trials: 10,
            hand: HandKind::FiveFinger,
            objects: desk_suite(),
            camera: CameraSpec::default(),
            pipeline: PipelineParams::default(),
            jitter_xy: 0.02,
            jitter_yaw: 0.2,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(invalid_param("trials must be >= 1"));
        }
        if self.objects.is_empty() {
            return Err(invalid_param("the object suite is empty"));
        }
        for (i, o) in self.objects.iter().enumerate() {
            o.shape()?;
            if self.objects[..i].iter().any(|p| p.name == o.name) {
                return Err(invalid_param(format!("duplicate object name {:?}", o.name)));
            }
        }
        if !(self.jitter_xy >= 0.0 && self.jitter_yaw >= 0.0) {
            return Err(invalid_param("jitter must be >= 0"));
        }
        self.camera.camera()?;
        self.pipeline.validate()
    }

    /// Scene of one trial and the seed its baseline run uses. Both depend only
    /// on the run seed, the object's position in the suite and the trial index.
    pub fn trial_scene(&self, object: usize, trial: usize) -> Result<(Scene, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((object as u64) << 32) | trial as u64);
        let mut jitter = |a: f64| if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 };
        let (dx, dy, yaw) = (jitter(self.jitter_xy), jitter(self.jitter_xy), jitter(self.jitter_yaw));
        let obj = self.objects[object].placed(dx, dy, yaw)?;
        Ok((Scene::new(vec![obj], Some(0.0))?, rng.gen()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Informed,
    RandomBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub object: String,
    pub trial: usize,
    pub method: Method,
    pub success: bool,
    /// Search attempts until the first feasible grasp; the attempt cap when
    /// the trial failed.
    pub attempts: usize,
    pub grasp_type: Option<String>,
    pub quality: Option<f64>,
    /// Why the trial failed, if it did.
    pub failure: Option<String>,
}

/// Success rate and mean attempts of both methods for one object, or for the
/// whole suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub object: String,
    /// Trials per method.
    pub trials: usize,
    pub informed_successes: usize,
    pub informed_success_rate: f64,
    pub informed_mean_attempts: f64,
    pub random_baseline_successes: usize,
    pub random_baseline_success_rate: f64,
    pub random_baseline_mean_attempts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub hand: HandKind,
    pub trials_per_object: usize,
    pub max_attempts: usize,
    pub objects: Vec<ReportRow>,
    pub aggregate: ReportRow,
    pub trials: Vec<TrialRecord>,
}

impl ExperimentReport {
    pub const CSV_HEADER: &'static str = "object,informed_success_rate,informed_mean_attempts,random_baseline_success_rate,random_baseline_mean_attempts";

    /// Per-object rows followed by the aggregate row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in self.objects.iter().chain(std::iter::once(&self.aggregate)) {
            let _ = writeln!(
                out,
                "{},{:.4},{:.4},{:.4},{:.4}",
                r.object,
                r.informed_success_rate,
                r.informed_mean_attempts,
                r.random_baseline_success_rate,
                r.random_baseline_mean_attempts
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn row(&self, object: &str) -> Option<&ReportRow> {
        self.objects.iter().find(|r| r.object == object)
    }
}

fn failure_name(e: &Error) -> Option<&'static str> {
    match e {
        Error::PlanningFailed { .. } => Some("planning_failed"),
        Error::NoRoi => Some("no_roi"),
        Error::NoGraspPoint => Some("no_grasp_point"),
        Error::NoSurface => Some("no_surface"),
        _ => None,
    }
}

fn record(object: &str, trial: usize, method: Method, cap: usize, result: Result<PlanResult>) -> Result<TrialRecord> {
    let mut rec = TrialRecord {
        object: object.to_string(),
        trial,
        method,
        success: false,
        attempts: cap,
        grasp_type: None,
        quality: None,
        failure: None,
    };
    match result {
        Ok(p) => {
            rec.success = true;
            rec.attempts = p.attempts_used;
            rec.grasp_type = Some(p.grasp_type.name().to_string());
            rec.quality = Some(p.best.outcome.quality);
        }
        Err(e) => match failure_name(&e) {
            Some(name) => rec.failure = Some(name.to_string()),
            None => return Err(e),
        },
    }
    Ok(rec)
}

fn summarize(object: &str, trials: &[&TrialRecord]) -> ReportRow {
    let stats = |m: Method| {
        let t: Vec<_> = trials.iter().filter(|t| t.method == m).collect();
        let n = t.len().max(1) as f64;
        let ok = t.iter().filter(|t| t.success).count();
        let att: usize = t.iter().map(|t| t.attempts).sum();
        (t.len(), ok, ok as f64 / n, att as f64 / n)
    };
    let (n, is, ir, ia) = stats(Method::Informed);
    let (_, bs, br, ba) = stats(Method::RandomBaseline);
    ReportRow {
        object: object.to_string(),
        trials: n,
        informed_successes: is,
        informed_success_rate: ir,
        informed_mean_attempts: ia,
        random_baseline_successes: bs,
        random_baseline_success_rate: br,
        random_baseline_mean_attempts: ba,
    }
}

/// Runs every trial of every suite object with both methods. Trials run in
/// parallel; the report does not depend on scheduling.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let camera = cfg.camera.camera()?;
    let provider = SyntheticProvider::new(cfg.pipeline.provider)?;
    let hand = HandModel::preset(cfg.hand);
    let cap = cfg.pipeline.planner.max_attempts;
    let jobs: Vec<(usize, usize)> = (0..cfg.objects.len())
        .flat_map(|o| (0..cfg.trials).map(move |t| (o, t)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(o, t)| {
            let name = &cfg.objects[o].name;
            let (scene, seed) = cfg.trial_scene(o, t)?;
            let informed = run_informed(&scene, &camera, &provider, &hand, &cfg.pipeline).map(|r| r.plan);
            let baseline = random_baseline(&scene, name, &hand, &cfg.pipeline.planner, seed);
            Ok([
                record(name, t, Method::Informed, cap, informed)?,
                record(name, t, Method::RandomBaseline, cap, baseline)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let trials: Vec<TrialRecord> = per_job.into_iter().flatten().collect();
    let objects = cfg
        .objects
        .iter()
        .map(|o| {
            let mine: Vec<&TrialRecord> = trials.iter().filter(|t| t.object == o.name).collect();
            summarize(&o.name, &mine)
        })
        .collect();
    let all: Vec<&TrialRecord> = trials.iter().collect();
    Ok(ExperimentReport {
        seed: cfg.seed,
        hand: cfg.hand,
        trials_per_object: cfg.trials,
        max_attempts: cap,
        objects,
        aggregate: summarize("all", &all),
        trials,
    })
}
