use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Result};

/// Pinhole camera. Camera frame: `x` right, `y` down, `z` along the optical axis.
/// Integer pixel coordinates address pixel centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// world ← camera
    pub pose: Isometry3<f64>,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize, pose: Isometry3<f64>) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            pose,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(invalid_param("focal lengths must be positive"));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(invalid_param("principal point must lie inside the image"));
        }
        Ok(())
    }

    /// Camera at `eye` looking at `target`; `up` points towards the top of the image.
    pub fn look_at(
        eye: Point3<f64>,
        target: Point3<f64>,
        up: Vector3<f64>,
        width: usize,
        height: usize,
        focal: f64,
    ) -> Result<Self> {
        let z = (target - eye).normalize();
        let up_perp = up - z * up.dot(&z);
        if up_perp.norm() < 1e-9 {
            return Err(invalid_param("up vector is parallel to the viewing direction"));
        }
        let y = -up_perp.normalize();
        let x = y.cross(&z);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
        let pose = Isometry3::from_parts(
            Translation3::from(eye.coords),
            UnitQuaternion::from_rotation_matrix(&rot),
        );
        Self::new(
            focal,
            focal,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
            pose,
        )
    }

    /// Overhead camera `height` metres above the world origin, image top towards +y.
    pub fn overhead(height_m: f64, width: usize, height: usize, focal: f64) -> Result<Self> {
        Self::look_at(
            Point3::new(0.0, 0.0, height_m),
            Point3::origin(),
            Vector3::y(),
            width,
            height,
            focal,
        )
    }

    pub fn origin(&self) -> Point3<f64> {
        Point3::from(self.pose.translation.vector)
    }

    /// World-frame ray through pixel `(u, v)`. The direction has unit camera-z
    /// component, so the ray parameter equals z-depth.
    pub fn ray(&self, u: f64, v: f64) -> (Point3<f64>, Vector3<f64>) {
        let d_cam = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        (self.origin(), self.pose.rotation * d_cam)
    }

    /// Back-projects pixel `(u, v)` at z-depth `z` to world coordinates.
    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Point3<f64> {
        let p_cam = Point3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z);
        self.pose * p_cam
    }

    /// Projects a world point; `None` when it is behind the camera.
    pub fn project(&self, p: &Point3<f64>) -> Option<[f64; 2]> {
        let c = self.pose.inverse_transform_point(p);
        if c.z <= 0.0 {
            return None;
        }
        Some([self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy])
    }

    pub fn to_camera_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.pose.inverse_transform_vector(v)
    }
}
