use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{Point3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::Contact;
use crate::error::{invalid_param, Result};

/// Coulomb friction with a soft-finger torsional term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrictionModel {
    pub mu: f64,
    /// Number of edges in the polyhedral cone approximation.
    pub cone_edges: usize,
    /// Effective contact-patch radius for torsional friction, metres.
    pub torsion_radius: f64,
}

impl Default for FrictionModel {
    fn default() -> Self {
        Self {
            mu: 0.6,
            cone_edges: 8,
            torsion_radius: 0.005,
        }
    }
}

impl FrictionModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(invalid_param("friction coefficient must be >= 0"));
        }
        if self.cone_edges < 3 {
            return Err(invalid_param("friction cone needs at least 3 edges"));
        }
        if !(self.torsion_radius >= 0.0) {
            return Err(invalid_param("torsion radius must be >= 0"));
        }
        Ok(())
    }
}

/// Two unit tangents completing `n` to a right-handed frame.
pub fn tangent_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let t1 = n.cross(&helper).normalize();
    (t1, n.cross(&t1))
}

/// Tangent frame of a contact's friction cone. The first tangent follows the
/// tangential part of the applied force, so the discretized cone turns with
/// the hand; a purely normal push falls back to [`tangent_basis`].
pub fn contact_tangents(c: &Contact) -> (Vector3<f64>, Vector3<f64>) {
    let inward = -c.normal;
    let slip = c.force_dir - inward * c.force_dir.dot(&inward);
    if slip.norm() > 1e-6 {
        let t1 = slip.normalize();
        (t1, inward.cross(&t1))
    } else {
        tangent_basis(&inward)
    }
}

/// Primitive wrenches of each contact's discretized friction cone, about
/// `center`, with torques divided by `radius`. Each cone edge carries unit
/// normal force; the soft-finger torsion appears as a `±` pair per edge.
/// Returns `(contact index, wrench)` pairs.
pub fn cone_wrenches(
    contacts: &[Contact],
    center: &Point3<f64>,
    radius: f64,
    friction: &FrictionModel,
) -> Vec<(usize, Vector6<f64>)> {
    let mut out = Vec::with_capacity(contacts.len() * friction.cone_edges * 2);
    for (i, c) in contacts.iter().enumerate() {
        let inward = -c.normal;
        let (t1, t2) = contact_tangents(c);
        let arm = c.position - center;
        for k in 0..friction.cone_edges {
            let th = std::f64::consts::TAU * k as f64 / friction.cone_edges as f64;
            let f = inward + friction.mu * (th.cos() * t1 + th.sin() * t2);
            let tau = arm.cross(&f) / radius;
            let twist = inward * (friction.mu * friction.torsion_radius / radius);
            for sign in [1.0, -1.0] {
                let t = tau + twist * sign;
                out.push((i, Vector6::new(f.x, f.y, f.z, t.x, t.y, t.z)));
            }
        }
    }
    out
}

/// Radius of the largest origin-centred ball inside the convex hull of
/// `points`; 0 when the origin is not strictly inside or the hull is flat.
pub fn hull_inradius(points: &[Vector6<f64>]) -> f64 {
    if points.len() < 7 {
        return 0.0;
    }
    let qh = match qhull::Qh::builder()
        .capture_stderr(true)
        .build_from_iter(points.iter().map(|p| p.iter().copied().collect::<Vec<_>>()))
    {
        Ok(qh) => qh,
        // Degenerate (lower-dimensional) input.
        Err(_) => return 0.0,
    };
    let mut eps = f64::INFINITY;
    for facet in qh.facets() {
        let Some(normal) = facet.normal() else {
            continue;
        };
        let len: f64 = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        // Hyperplane n·x + offset = 0 with the hull on the negative side.
        let dist = -facet.offset() / len;
        eps = eps.min(dist);
    }
    if eps.is_finite() && eps > 1e-12 {
        eps
    } else {
        0.0
    }
}

/// Hull inradius of the unit-force contact wrenches about the object centre.
pub fn epsilon_quality(contacts: &[Contact], center: &Point3<f64>, radius: f64, friction: &FrictionModel) -> f64 {
    let unit: Vec<Vector6<f64>> = cone_wrenches(contacts, center, radius, friction)
        .into_iter()
        .map(|(_, w)| {
            let fnorm = w.fixed_rows::<3>(0).norm();
            w / fnorm
        })
        .collect();
    hull_inradius(&unit)
}

/// Whether non-negative cone-edge forces, with each contact's normal force at
/// most its cap, can produce `target` (force, torque about `center`).
pub fn can_resist(
    contacts: &[Contact],
    center: &Point3<f64>,
    friction: &FrictionModel,
    caps: &[f64],
    target: &Vector6<f64>,
) -> bool {
    if contacts.is_empty() {
        return target.norm() == 0.0;
    }
    let prims = cone_wrenches(contacts, center, 1.0, friction);
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = prims.iter().map(|_| lp.add_var(1.0, (0.0, f64::INFINITY))).collect();
    for row in 0..6 {
        let expr: Vec<_> = vars.iter().zip(&prims).map(|(&v, (_, w))| (v, w[row])).collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, target[row]);
    }
    for (i, &cap) in caps.iter().enumerate() {
        let expr: Vec<_> = vars
            .iter()
            .zip(&prims)
            .filter(|(_, (ci, _))| *ci == i)
            .map(|(&v, _)| (v, 1.0))
            .collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Le, cap);
    }
    lp.solve().is_ok()
}
