use nalgebra::{Point3, Rotation3, Vector3, Vector6};

use super::hand::HandModel;
use super::search::{hand_pose, PreGrasp, SearchPoint};
use super::wrench::{can_resist, epsilon_quality, FrictionModel};
use super::{Contact, FailureReason, GraspOutcome, PlannerParams};
use crate::error::{invalid_input, Result};
use crate::scene::{PrimitiveObject, Scene};

const GRAVITY: f64 = 9.81;
/// Half thickness of the palm disc.
const PALM_HALF_THICKNESS: f64 = 0.005;

/// Blended grasp quality: `λ·ε + (1 − λ)·min_i(f̂_i · (−n_i))`, clamped to `[0, 1]`.
pub fn quality(
    contacts: &[Contact],
    center: &Point3<f64>,
    radius: f64,
    friction: &FrictionModel,
    lambda: f64,
) -> Result<f64> {
    if contacts.is_empty() {
        return Err(invalid_input("quality needs at least one contact"));
    }
    Ok(blend(
        epsilon_quality(contacts, center, radius, friction),
        contacts,
        lambda,
    ))
}

fn blend(eps: f64, contacts: &[Contact], lambda: f64) -> f64 {
    let align = contacts
        .iter()
        .map(|c| c.force_dir.dot(&-c.normal))
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0);
    (lambda * eps + (1.0 - lambda) * align).clamp(0.0, 1.0)
}

struct Placement<'a> {
    rot: Rotation3<f64>,
    palm: Point3<f64>,
    hand: &'a HandModel,
}

impl Placement<'_> {
    fn approach(&self) -> Vector3<f64> {
        self.rot * Vector3::z()
    }

    fn palm_points(&self) -> Vec<Point3<f64>> {
        let r = self.hand.palm_radius;
        let mut pts = vec![self.palm];
        for (ring, n) in [(0.5 * r, 8), (r, 16)] {
            for k in 0..n {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                pts.push(self.palm + self.rot * Vector3::new(ring * a.cos(), ring * a.sin(), 0.0));
            }
        }
        pts
    }

    fn finger_base(&self, f: usize) -> Point3<f64> {
        let [x, y] = self.hand.finger_base_offsets[f];
        self.palm + self.rot * Vector3::new(x, y, 0.0)
    }

    /// Outward unit direction of finger `f` in the palm plane.
    fn finger_outward(&self, f: usize) -> Vector3<f64> {
        self.rot * Vector3::new(0.0, self.hand.finger_base_offsets[f][1].signum(), 0.0)
    }

    fn finger_dir(&self, f: usize, phi: f64) -> Vector3<f64> {
        self.approach() * phi.cos() + self.finger_outward(f) * phi.sin()
    }

    /// Sample points along finger `f` at angle `phi`, base to tip, with their
    /// distance from the base.
    fn finger_points(&self, f: usize, phi: f64) -> Vec<(Point3<f64>, f64)> {
        let l = self.hand.finger_length;
        let n = (l / 0.004).ceil() as usize;
        let base = self.finger_base(f);
        let dir = self.finger_dir(f, phi);
        (0..=n)
            .map(|i| {
                let s = l * i as f64 / n as f64;
                (base + dir * s, s)
            })
            .collect()
    }
}

enum Clash {
    None,
    Table,
    Object,
}

fn below_table(scene: &Scene, p: &Point3<f64>, radius: f64, clearance: f64) -> bool {
    scene.table_height.is_some_and(|h| p.z - radius < h + clearance)
}

fn penetrates(obj: &PrimitiveObject, p: &Point3<f64>, radius: f64) -> bool {
    obj.sdf(p) - radius < 0.0
}

/// Collision state of the palm and the listed fingers at their angles.
fn hand_clash(scene: &Scene, pl: &Placement, fingers: &[(usize, f64)], clearance: f64) -> Clash {
    let palm = pl.palm_points();
    let rf = pl.hand.finger_radius;
    let finger_pts: Vec<Point3<f64>> = fingers
        .iter()
        .flat_map(|&(f, phi)| pl.finger_points(f, phi).into_iter().map(|(p, _)| p))
        .collect();
    let table = palm
        .iter()
        .any(|p| below_table(scene, p, PALM_HALF_THICKNESS, clearance))
        || finger_pts.iter().any(|p| below_table(scene, p, rf, clearance));
    if table {
        return Clash::Table;
    }
    let object = scene.objects.iter().any(|o| {
        palm.iter().any(|p| penetrates(o, p, PALM_HALF_THICKNESS)) || finger_pts.iter().any(|p| penetrates(o, p, rf))
    });
    if object {
        Clash::Object
    } else {
        Clash::None
    }
}

fn failed(reason: FailureReason, contacts: Vec<Contact>, pl: &Placement) -> GraspOutcome {
    GraspOutcome {
        feasible: false,
        contacts,
        quality: 0.0,
        failure: Some(reason),
        palm_center: pl.palm,
        palm_rotation: pl.rot,
    }
}

/// Closes one finger from its open angle. Returns the contact with the
/// target, or `None` when the finger is blocked or closes on nothing.
fn close_finger(
    scene: &Scene,
    target: &PrimitiveObject,
    pl: &Placement,
    f: usize,
    params: &PlannerParams,
) -> Option<Contact> {
    let hand = pl.hand;
    let (open, closed) = (hand.open_angle(f), hand.closed_angle(f));
    let dphi = params.step / hand.finger_length;
    let steps = ((open - closed) / dphi).ceil() as usize;
    let rf = hand.finger_radius;
    for i in 0..=steps {
        let phi = (open - i as f64 * dphi).max(closed);
        let pts = pl.finger_points(f, phi);
        if pts
            .iter()
            .any(|(p, _)| below_table(scene, p, rf, params.table_clearance))
        {
            return None;
        }
        let hit = pts
            .iter()
            .map(|(p, s)| (p, *s, target.sdf(p) - rf))
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .filter(|(_, _, d)| *d <= 0.0);
        if let Some((p, s, _)) = hit {
            let (q, n) = target.closest_surface(p);
            // Motion of the touching finger point as the angle decreases.
            let motion = pl.approach() * phi.sin() - pl.finger_outward(f) * phi.cos();
            let force_dir = if s > 0.0 { motion.normalize() } else { pl.approach() };
            return Some(Contact {
                position: q,
                normal: n.into_inner(),
                force_dir,
                normal_force: hand.force_threshold,
            });
        }
        let other = scene
            .objects
            .iter()
            .filter(|o| o.id != target.id)
            .any(|o| pts.iter().any(|(p, _)| penetrates(o, p, rf)));
        if other {
            return None;
        }
    }
    None
}

/// Simulates one candidate: placement, finger closure, the lift test and the
/// force-closure test.
pub fn execute_candidate(
    scene: &Scene,
    hand: &HandModel,
    pg: &PreGrasp,
    sp: &SearchPoint,
    params: &PlannerParams,
) -> Result<GraspOutcome> {
    let target = scene
        .object(&pg.object_id)
        .ok_or_else(|| invalid_input(format!("no object {:?} in scene", pg.object_id)))?;
    let (rot, palm) = hand_pose(pg, sp);
    let pl = Placement { rot, palm, hand };
    let fingers = hand.active_fingers(pg.grasp_type);
    let open: Vec<(usize, f64)> = fingers.iter().map(|&f| (f, hand.open_angle(f))).collect();
    let clearance = params.table_clearance;

    match hand_clash(scene, &pl, &open, clearance) {
        Clash::Table => return Ok(failed(FailureReason::TableCollision, Vec::new(), &pl)),
        Clash::Object => return Ok(failed(FailureReason::ObjectCollision, Vec::new(), &pl)),
        Clash::None => {}
    }

    let contacts: Vec<Contact> = fingers
        .iter()
        .filter_map(|&f| close_finger(scene, target, &pl, f, params))
        .collect();
    if contacts.len() < 2 {
        return Ok(failed(FailureReason::NoContact, contacts, &pl));
    }

    let center = target.center();
    let caps: Vec<f64> = contacts.iter().map(|c| c.normal_force).collect();
    let lift = Vector6::new(0.0, 0.0, target.mass() * GRAVITY, 0.0, 0.0, 0.0);
    if !can_resist(&contacts, &center, &params.friction, &caps, &lift) {
        return Ok(failed(FailureReason::DropsUnderGravity, contacts, &pl));
    }
    let radius = target.shape.bounding_radius();
    let eps = epsilon_quality(&contacts, &center, radius, &params.friction);
    if eps <= 0.0 {
        return Ok(failed(FailureReason::NotForceClosure, contacts, &pl));
    }
    let q = blend(eps, &contacts, params.quality_lambda);
    Ok(GraspOutcome {
        feasible: q > 0.0,
        contacts,
        quality: q,
        failure: None,
        palm_center: pl.palm,
        palm_rotation: pl.rot,
    })
}
