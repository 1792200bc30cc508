use std::f64::consts::PI;

use nalgebra::{Isometry3, Point3, Unit, Vector3};
use rand::Rng;

/// Analytic solid in its local frame. Cylinders and capsules run along local `z`
/// and are centred on the origin; box dimensions are full edge lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere {
        r: f64,
    },
    Cylinder {
        r: f64,
        h: f64,
    },
    Box {
        sx: f64,
        sy: f64,
        sz: f64,
    },
    /// `l` is the length of the spine segment between the hemisphere centres.
    Capsule {
        r: f64,
        l: f64,
    },
}

impl Shape {
    pub fn kind(&self) -> &'static str {
        match self {
            Shape::Sphere { .. } => "sphere",
            Shape::Cylinder { .. } => "cylinder",
            Shape::Box { .. } => "box",
            Shape::Capsule { .. } => "capsule",
        }
    }

    pub fn dims(&self) -> Vec<f64> {
        match *self {
            Shape::Sphere { r } => vec![r],
            Shape::Cylinder { r, h } => vec![r, h],
            Shape::Box { sx, sy, sz } => vec![sx, sy, sz],
            Shape::Capsule { r, l } => vec![r, l],
        }
    }

    pub fn from_kind(kind: &str, dims: &[f64]) -> Option<Shape> {
        let shape = match (kind, dims) {
            ("sphere", &[r]) => Shape::Sphere { r },
            ("cylinder", &[r, h]) => Shape::Cylinder { r, h },
            ("box", &[sx, sy, sz]) => Shape::Box { sx, sy, sz },
            ("capsule", &[r, l]) => Shape::Capsule { r, l },
            _ => return None,
        };
        shape.is_valid().then_some(shape)
    }

    pub fn is_valid(&self) -> bool {
        self.dims().iter().all(|d| d.is_finite() && *d > 0.0)
    }

    pub fn volume(&self) -> f64 {
        match *self {
            Shape::Sphere { r } => 4.0 / 3.0 * PI * r.powi(3),
            Shape::Cylinder { r, h } => PI * r * r * h,
            Shape::Box { sx, sy, sz } => sx * sy * sz,
            Shape::Capsule { r, l } => PI * r * r * l + 4.0 / 3.0 * PI * r.powi(3),
        }
    }

    /// Radius of the smallest origin-centred sphere enclosing the solid.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Sphere { r } => r,
            Shape::Cylinder { r, h } => r.hypot(h / 2.0),
            Shape::Box { sx, sy, sz } => Vector3::new(sx, sy, sz).norm() / 2.0,
            Shape::Capsule { r, l } => l / 2.0 + r,
        }
    }

    pub fn surface_area(&self) -> f64 {
        match *self {
            Shape::Sphere { r } => 4.0 * PI * r * r,
            Shape::Cylinder { r, h } => 2.0 * PI * r * h + 2.0 * PI * r * r,
            Shape::Box { sx, sy, sz } => 2.0 * (sx * sy + sy * sz + sx * sz),
            Shape::Capsule { r, l } => 2.0 * PI * r * l + 4.0 * PI * r * r,
        }
    }

    /// Signed distance, negative inside.
    pub fn sdf(&self, p: &Point3<f64>) -> f64 {
        match *self {
            Shape::Sphere { r } => p.coords.norm() - r,
            Shape::Box { sx, sy, sz } => {
                let q = p.coords.abs() - Vector3::new(sx, sy, sz) / 2.0;
                q.sup(&Vector3::zeros()).norm() + q.max().min(0.0)
            }
            Shape::Cylinder { r, h } => {
                let dx = p.x.hypot(p.y) - r;
                let dz = p.z.abs() - h / 2.0;
                dx.max(dz).min(0.0) + dx.max(0.0).hypot(dz.max(0.0))
            }
            Shape::Capsule { r, l } => {
                let a = l / 2.0;
                (p - Point3::new(0.0, 0.0, p.z.clamp(-a, a))).norm() - r
            }
        }
    }

    /// Closest surface point and outward unit normal there.
    pub fn closest_surface(&self, p: &Point3<f64>) -> (Point3<f64>, Unit<Vector3<f64>>) {
        match *self {
            Shape::Sphere { r } => {
                let n = radial(p.coords, Vector3::z());
                (Point3::from(n.into_inner() * r), n)
            }
            Shape::Box { sx, sy, sz } => {
                let half = Vector3::new(sx, sy, sz) / 2.0;
                let q = p.coords.abs() - half;
                if q.max() > 0.0 {
                    let c = p.coords.zip_map(&half, |v, hv| v.clamp(-hv, hv));
                    let n = face_normal_at(&c, &half);
                    return (Point3::from(c), n);
                }
                // Inside or on the surface: project onto the nearest face.
                let axis = q.imax();
                let sign = if p[axis] >= 0.0 { 1.0 } else { -1.0 };
                let mut c = p.coords;
                c[axis] = sign * half[axis];
                let mut n = Vector3::zeros();
                n[axis] = sign;
                (Point3::from(c), Unit::new_unchecked(n))
            }
            Shape::Cylinder { r, h } => {
                let hh = h / 2.0;
                let rho = p.x.hypot(p.y);
                let radial_dir = if rho > 1e-15 {
                    Vector3::new(p.x / rho, p.y / rho, 0.0)
                } else {
                    Vector3::x()
                };
                let cap_sign = if p.z >= 0.0 { 1.0 } else { -1.0 };
                let dx = rho - r;
                let dz = p.z.abs() - hh;
                if dx > 0.0 || dz > 0.0 {
                    let cr = rho.min(r);
                    let cz = p.z.clamp(-hh, hh);
                    let c = Point3::new(radial_dir.x * cr, radial_dir.y * cr, cz);
                    let n = if dx > 0.0 && dz <= 0.0 {
                        Unit::new_unchecked(radial_dir)
                    } else if dz > 0.0 && dx <= 0.0 {
                        Unit::new_unchecked(Vector3::z() * cap_sign)
                    } else {
                        Unit::new_normalize(p - c)
                    };
                    return (c, n);
                }
                if dx >= dz {
                    let c = Point3::new(radial_dir.x * r, radial_dir.y * r, p.z);
                    (c, Unit::new_unchecked(radial_dir))
                } else {
                    let c = Point3::new(p.x, p.y, cap_sign * hh);
                    (c, Unit::new_unchecked(Vector3::z() * cap_sign))
                }
            }
            Shape::Capsule { r, l } => {
                let a = l / 2.0;
                let spine = Point3::new(0.0, 0.0, p.z.clamp(-a, a));
                let n = radial(p - spine, Vector3::x());
                (spine + n.into_inner() * r, n)
            }
        }
    }

    /// Smallest ray parameter `t > t_min` where `origin + t·dir` enters the solid.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>, t_min: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        let mut consider = |t: f64, ok: bool| {
            if ok && t > t_min && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        };
        match *self {
            Shape::Sphere { r } => {
                for t in sphere_roots(origin.coords, dir, r) {
                    consider(t, true);
                }
            }
            Shape::Box { sx, sy, sz } => {
                let half = Vector3::new(sx, sy, sz) / 2.0;
                let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
                for i in 0..3 {
                    if dir[i].abs() < 1e-300 {
                        if origin[i].abs() > half[i] {
                            return None;
                        }
                        continue;
                    }
                    let a = (-half[i] - origin[i]) / dir[i];
                    let b = (half[i] - origin[i]) / dir[i];
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
                if t0 <= t1 {
                    consider(t0, true);
                    consider(t1, true);
                }
            }
            Shape::Cylinder { r, h } => {
                let hh = h / 2.0;
                for t in circle_roots(origin, dir, r) {
                    let z = origin.z + t * dir.z;
                    consider(t, z.abs() <= hh);
                }
                if dir.z.abs() > 1e-300 {
                    for zc in [-hh, hh] {
                        let t = (zc - origin.z) / dir.z;
                        let (x, y) = (origin.x + t * dir.x, origin.y + t * dir.y);
                        consider(t, x * x + y * y <= r * r);
                    }
                }
            }
            Shape::Capsule { r, l } => {
                let a = l / 2.0;
                for t in circle_roots(origin, dir, r) {
                    let z = origin.z + t * dir.z;
                    consider(t, z.abs() <= a);
                }
                for zc in [-a, a] {
                    let o = origin.coords - Vector3::new(0.0, 0.0, zc);
                    for t in sphere_roots(o, dir, r) {
                        consider(t, true);
                    }
                }
            }
        }
        best
    }

    /// Area-uniform random surface point with its outward normal.
    pub fn sample_surface(&self, rng: &mut impl Rng) -> (Point3<f64>, Unit<Vector3<f64>>) {
        match *self {
            Shape::Sphere { r } => {
                let n = random_unit(rng);
                (Point3::from(n.into_inner() * r), n)
            }
            Shape::Box { sx, sy, sz } => {
                let half = Vector3::new(sx, sy, sz) / 2.0;
                let areas = [sy * sz, sx * sz, sx * sy];
                let total: f64 = areas.iter().sum();
                let mut pick = rng.gen::<f64>() * total;
                let mut axis = 2;
                for (i, a) in areas.iter().enumerate() {
                    if pick < *a {
                        axis = i;
                        break;
                    }
                    pick -= a;
                }
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                let mut c = Vector3::from_fn(|i, _| rng.gen_range(-half[i]..=half[i]));
                c[axis] = sign * half[axis];
                let mut n = Vector3::zeros();
                n[axis] = sign;
                (Point3::from(c), Unit::new_unchecked(n))
            }
            Shape::Cylinder { r, h } => {
                let side = 2.0 * PI * r * h;
                let cap = PI * r * r;
                let pick = rng.gen::<f64>() * (side + 2.0 * cap);
                if pick < side {
                    let th = rng.gen::<f64>() * 2.0 * PI;
                    let z = rng.gen_range(-h / 2.0..=h / 2.0);
                    let n = Vector3::new(th.cos(), th.sin(), 0.0);
                    (Point3::new(r * n.x, r * n.y, z), Unit::new_unchecked(n))
                } else {
                    let sign = if pick < side + cap { 1.0 } else { -1.0 };
                    let rr = r * rng.gen::<f64>().sqrt();
                    let th = rng.gen::<f64>() * 2.0 * PI;
                    (
                        Point3::new(rr * th.cos(), rr * th.sin(), sign * h / 2.0),
                        Unit::new_unchecked(Vector3::z() * sign),
                    )
                }
            }
            Shape::Capsule { r, l } => {
                let side = 2.0 * PI * r * l;
                let caps = 4.0 * PI * r * r;
                if rng.gen::<f64>() * (side + caps) < side {
                    let th = rng.gen::<f64>() * 2.0 * PI;
                    let z = rng.gen_range(-l / 2.0..=l / 2.0);
                    let n = Vector3::new(th.cos(), th.sin(), 0.0);
                    (Point3::new(r * n.x, r * n.y, z), Unit::new_unchecked(n))
                } else {
                    let n = random_unit(rng);
                    let zc = if n.z >= 0.0 { l / 2.0 } else { -l / 2.0 };
                    (Point3::new(0.0, 0.0, zc) + n.into_inner() * r, n)
                }
            }
        }
    }
}

fn radial(v: Vector3<f64>, fallback: Vector3<f64>) -> Unit<Vector3<f64>> {
    Unit::try_new(v, 1e-15).unwrap_or_else(|| Unit::new_unchecked(fallback))
}

fn face_normal_at(c: &Vector3<f64>, half: &Vector3<f64>) -> Unit<Vector3<f64>> {
    let q = c.abs() - half;
    let axis = q.imax();
    let mut n = Vector3::zeros();
    n[axis] = if c[axis] >= 0.0 { 1.0 } else { -1.0 };
    Unit::new_unchecked(n)
}

fn random_unit(rng: &mut impl Rng) -> Unit<Vector3<f64>> {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let th = rng.gen::<f64>() * 2.0 * PI;
    let s = (1.0 - z * z).max(0.0).sqrt();
    Unit::new_normalize(Vector3::new(s * th.cos(), s * th.sin(), z))
}

fn sphere_roots(o: Vector3<f64>, d: &Vector3<f64>, r: f64) -> Vec<f64> {
    quadratic(d.dot(d), 2.0 * o.dot(d), o.dot(&o) - r * r)
}

fn circle_roots(o: &Point3<f64>, d: &Vector3<f64>, r: f64) -> Vec<f64> {
    let a = d.x * d.x + d.y * d.y;
    if a < 1e-300 {
        return Vec::new();
    }
    quadratic(a, 2.0 * (o.x * d.x + o.y * d.y), o.x * o.x + o.y * o.y - r * r)
}

/// Real roots of `a t² + b t + c` using the cancellation-free form.
fn quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 || a == 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// A posed, coloured primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveObject {
    pub id: String,
    pub shape: Shape,
    /// world ← object
    pub pose: Isometry3<f64>,
    pub color: [f64; 3],
    /// Kilograms. `None` uses [`PrimitiveObject::DEFAULT_DENSITY`] × volume.
    pub mass: Option<f64>,
}

impl PrimitiveObject {
    /// Roughly fruit/packaging density, kg/m³.
    pub const DEFAULT_DENSITY: f64 = 500.0;

    pub fn new(id: impl Into<String>, shape: Shape, pose: Isometry3<f64>, color: [f64; 3]) -> Self {
        Self {
            id: id.into(),
            shape,
            pose,
            color,
            mass: None,
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass.unwrap_or_else(|| Self::DEFAULT_DENSITY * self.shape.volume())
    }

    pub fn center(&self) -> Point3<f64> {
        Point3::from(self.pose.translation.vector)
    }

    pub fn sdf(&self, p: &Point3<f64>) -> f64 {
        self.shape.sdf(&self.pose.inverse_transform_point(p))
    }

    pub fn closest_surface(&self, p: &Point3<f64>) -> (Point3<f64>, Unit<Vector3<f64>>) {
        let (c, n) = self.shape.closest_surface(&self.pose.inverse_transform_point(p));
        (self.pose * c, self.pose.rotation * n)
    }

    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>, t_min: f64) -> Option<f64> {
        let o = self.pose.inverse_transform_point(origin);
        let d = self.pose.inverse_transform_vector(dir);
        self.shape.intersect(&o, &d, t_min)
    }

    pub fn sample_surface(&self, rng: &mut impl Rng) -> (Point3<f64>, Unit<Vector3<f64>>) {
        let (p, n) = self.shape.sample_surface(rng);
        (self.pose * p, self.pose.rotation * n)
    }
}
