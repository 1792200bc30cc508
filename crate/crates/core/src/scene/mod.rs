//! Synthetic tabletop world: analytic primitives, a pinhole camera, depth and
//! RGB rendering, surface normals and 2D → 3D lifting.

mod camera;
mod primitive;

pub use camera::CameraModel;
pub use primitive::{PrimitiveObject, Shape};

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Error, Result};
use crate::imaging::ImageF;

/// Distance within which a point counts as lying on an object surface.
pub const SURFACE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub objects: Vec<PrimitiveObject>,
    /// Height of the horizontal table plane; `None` for no table.
    pub table_height: Option<f64>,
}

/// A point on an object surface with its outward unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfacePoint {
    pub position: Point3<f64>,
    pub normal: Unit<Vector3<f64>>,
    pub object_id: String,
}

/// What a camera ray hit first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HitTarget {
    Object(usize),
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Ray parameter; equals z-depth for camera rays.
    pub t: f64,
    pub target: HitTarget,
}

impl Scene {
    pub fn new(objects: Vec<PrimitiveObject>, table_height: Option<f64>) -> Result<Self> {
        let scene = Self { objects, table_height };
        scene.validate()?;
        Ok(scene)
    }

    pub fn empty() -> Self {
        Self {
            objects: Vec::new(),
            table_height: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return Err(invalid_input(format!("duplicate object id {:?}", o.id)));
            }
            if !o.shape.is_valid() {
                return Err(invalid_input(format!("object {:?} has non-positive dimensions", o.id)));
            }
            let r = o.pose.rotation.to_rotation_matrix().into_inner();
            if (r * r.transpose() - nalgebra::Matrix3::identity()).norm() > 1e-9 {
                return Err(invalid_input(format!("object {:?} rotation is not orthonormal", o.id)));
            }
        }
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&PrimitiveObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Nearest intersection along `origin + t·dir`, `t > 0`.
    pub fn cast(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for (i, o) in self.objects.iter().enumerate() {
            if let Some(t) = o.intersect(origin, dir, 0.0) {
                if best.is_none_or(|b| t < b.t) {
                    best = Some(Hit {
                        t,
                        target: HitTarget::Object(i),
                    });
                }
            }
        }
        if let Some(zt) = self.table_height {
            if dir.z.abs() > 1e-300 {
                let t = (zt - origin.z) / dir.z;
                if t > 0.0 && best.is_none_or(|b| t < b.t) {
                    best = Some(Hit {
                        t,
                        target: HitTarget::Table,
                    });
                }
            }
        }
        best
    }

    /// Z-depth at pixel `(u, v)` in double precision; `None` when nothing is hit.
    pub fn depth_at(&self, camera: &CameraModel, u: f64, v: f64) -> Option<f64> {
        let (o, d) = camera.ray(u, v);
        self.cast(&o, &d).map(|h| h.t)
    }

    /// Signed distance to the nearest object surface, if any.
    pub fn nearest_object(&self, p: &Point3<f64>) -> Option<(usize, f64)> {
        self.objects
            .iter()
            .enumerate()
            .map(|(i, o)| (i, o.sdf(p)))
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
    }

    /// Analytic outward normal at a point within [`SURFACE_TOLERANCE`] of an object.
    pub fn surface_normal(&self, p: &Point3<f64>) -> Result<SurfacePoint> {
        let (i, d) = self.nearest_object(p).ok_or(Error::NoSurface)?;
        if d.abs() > SURFACE_TOLERANCE {
            return Err(Error::NoSurface);
        }
        let obj = &self.objects[i];
        let (position, normal) = obj.closest_surface(p);
        Ok(SurfacePoint {
            position,
            normal,
            object_id: obj.id.clone(),
        })
    }

    /// Moves every object and the table by a rigid transform. The rotation must
    /// keep the world z axis so the table stays horizontal.
    pub fn transformed(&self, t: &Isometry3<f64>) -> Result<Scene> {
        if (t.rotation * Vector3::z() - Vector3::z()).norm() > 1e-12 {
            return Err(invalid_input("scene transforms must preserve the vertical axis"));
        }
        Ok(Scene {
            objects: self
                .objects
                .iter()
                .map(|o| PrimitiveObject {
                    pose: t * o.pose,
                    ..o.clone()
                })
                .collect(),
            table_height: self.table_height.map(|h| h + t.translation.vector.z),
        })
    }

    fn per_pixel<T: Send>(&self, camera: &CameraModel, f: impl Fn(Option<Hit>, &Vector3<f64>) -> T + Sync) -> Vec<T> {
        (0..camera.height)
            .into_par_iter()
            .flat_map_iter(|v| {
                let f = &f;
                (0..camera.width).map(move |u| {
                    let (o, d) = camera.ray(u as f64, v as f64);
                    f(self.cast(&o, &d), &d)
                })
            })
            .collect()
    }

    /// Hit target per pixel, row-major.
    pub fn hit_buffer(&self, camera: &CameraModel) -> Vec<Option<Hit>> {
        self.per_pixel(camera, |h, _| h)
    }

    /// Per-pixel index of the first object hit, row-major; table and background are `None`.
    pub fn object_labels(&self, camera: &CameraModel) -> Vec<Option<usize>> {
        self.per_pixel(camera, |h, _| match h {
            Some(Hit {
                target: HitTarget::Object(i),
                ..
            }) => Some(i),
            _ => None,
        })
    }

    /// Load the scene from its JSON description.
    pub fn from_json(text: &str) -> Result<Scene> {
        let file: SceneFile = serde_json::from_str(text)?;
        file.into_scene()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SceneFile::from(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scene> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Z-depth image in metres; 0 where no geometry is hit.
pub fn render_depth(scene: &Scene, camera: &CameraModel) -> ImageF {
    let data = scene.per_pixel(camera, |h, _| h.map_or(0.0, |h| h.t as f32));
    ImageF::from_vec(camera.width, camera.height, 1, data).expect("depth buffer sized by camera")
}

/// Flat-shaded RGB: object colour times a Lambert term for a light at the
/// camera; table and empty pixels are mid-gray.
pub fn render_rgb(scene: &Scene, camera: &CameraModel) -> ImageF {
    const BACKGROUND: f32 = 0.5;
    let toward_light = Vector3::new(0.0, 0.0, -1.0);
    let pixels = scene.per_pixel(camera, |h, d| match h {
        Some(Hit {
            t,
            target: HitTarget::Object(i),
        }) => {
            let obj = &scene.objects[i];
            let p = camera.origin() + d * t;
            let (_, n) = obj.closest_surface(&p);
            let lambert = camera.to_camera_vector(&n).dot(&toward_light).max(0.0);
            obj.color.map(|c| (c * lambert) as f32)
        }
        _ => [BACKGROUND; 3],
    });
    let (w, h) = (camera.width, camera.height);
    ImageF::from_fn(w, h, 3, |x, y, c| pixels[y * w + x][c])
}

/// Back-projects a pixel using a depth image.
pub fn lift_point(camera: &CameraModel, depth: &ImageF, pixel: [f64; 2]) -> Result<Point3<f64>> {
    let (x, y) = (pixel[0].round(), pixel[1].round());
    if x < 0.0 || y < 0.0 || x >= depth.width() as f64 || y >= depth.height() as f64 {
        return Err(invalid_input(format!("pixel {pixel:?} outside depth image")));
    }
    let z = depth.get(x as usize, y as usize, 0) as f64;
    if !(z > 0.0) {
        return Err(Error::NoSurface);
    }
    Ok(camera.back_project(pixel[0], pixel[1], z))
}

#[derive(Debug, Serialize, Deserialize)]
struct SceneFile {
    table_height: Option<f64>,
    objects: Vec<ObjectFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ObjectFile {
    id: String,
    shape: ShapeFile,
    pose: PoseFile,
    color: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ShapeFile {
    kind: String,
    dims: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PoseFile {
    translation: [f64; 3],
    rotation_rpy: [f64; 3],
}

/// Builds a pose from a translation and roll/pitch/yaw angles (radians).
pub fn pose_from_rpy(translation: [f64; 3], rpy: [f64; 3]) -> Isometry3<f64> {
    Isometry3::from_parts(
        Translation3::new(translation[0], translation[1], translation[2]),
        UnitQuaternion::from_euler_angles(rpy[0], rpy[1], rpy[2]),
    )
}

impl SceneFile {
    fn into_scene(self) -> Result<Scene> {
        let objects = self
            .objects
            .into_iter()
            .map(|o| {
                let shape = Shape::from_kind(&o.shape.kind, &o.shape.dims).ok_or_else(|| {
                    invalid_input(format!(
                        "object {:?}: bad shape {} with dims {:?}",
                        o.id, o.shape.kind, o.shape.dims
                    ))
                })?;
                if let Some(m) = o.mass {
                    if !(m > 0.0) {
                        return Err(invalid_input(format!("object {:?}: mass must be > 0", o.id)));
                    }
                }
                Ok(PrimitiveObject {
                    id: o.id,
                    shape,
                    pose: pose_from_rpy(o.pose.translation, o.pose.rotation_rpy),
                    color: o.color,
                    mass: o.mass,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(objects, self.table_height)
    }
}

impl From<&Scene> for SceneFile {
    fn from(s: &Scene) -> Self {
        SceneFile {
            table_height: s.table_height,
            objects: s
                .objects
                .iter()
                .map(|o| {
                    let (r, p, y) = o.pose.rotation.euler_angles();
                    let t = o.pose.translation.vector;
                    ObjectFile {
                        id: o.id.clone(),
                        shape: ShapeFile {
                            kind: o.shape.kind().to_string(),
                            dims: o.shape.dims(),
                        },
                        pose: PoseFile {
                            translation: [t.x, t.y, t.z],
                            rotation_rpy: [r, p, y],
                        },
                        color: o.color,
                        mass: o.mass,
                    }
                })
                .collect(),
        }
    }
}
