use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};

use super::angle::wrap;
use super::{GraspImage, GraspWorld};
use crate::error::{Error, Result};

/// Pinhole intrinsics plus the camera's pose in the world frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub pose_world_from_camera: Isometry3<f64>,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, pose_world_from_camera: Isometry3<f64>) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidArgument(format!("focal lengths must be positive, got ({fx}, {fy})")));
        }
        Ok(Self { fx, fy, cx, cy, pose_world_from_camera })
    }

    /// Builds the pose from an explicit rotation matrix, which must be a proper
    /// rotation.
    pub fn with_rotation(fx: f64, fy: f64, cx: f64, cy: f64, rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if ortho > 1e-9 || (det - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "rotation is not proper (orthogonality error {ortho:e}, det {det})"
            )));
        }
        let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rotation));
        Self::new(fx, fy, cx, cy, Isometry3::from_parts(Translation3::from(translation), rot))
    }

    /// Camera `height` meters above the world origin, looking straight down,
    /// image rows running along world -y.
    pub fn looking_down(height: f64, fx: f64, w: usize, h: usize) -> Result<Self> {
        let rotation = Matrix3::from_columns(&[Vector3::x(), -Vector3::y(), -Vector3::z()]);
        Self::with_rotation(
            fx,
            fx,
            (w as f64 - 1.0) / 2.0,
            (h as f64 - 1.0) / 2.0,
            rotation,
            Vector3::new(0.0, 0.0, height),
        )
    }

    /// Projects a world point to `(u, v)` and camera depth.
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64, f64)> {
        let c = self.pose_world_from_camera.inverse_transform_point(p);
        (c.z > 0.0).then(|| (self.fx * c.x / c.z + self.cx, self.fy * c.y / c.z + self.cy, c.z))
    }

    /// World-frame direction of the image ray through `(u, v)`, with unit camera z.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        let d = Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        self.pose_world_from_camera.rotation * d
    }

    pub fn origin(&self) -> Point3<f64> {
        Point3::from(self.pose_world_from_camera.translation.vector)
    }
}

pub fn image_to_camera(u: f64, v: f64, depth: f64, cam: &CameraModel) -> Result<Point3<f64>> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::InvalidDepth(depth));
    }
    Ok(Point3::new((u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, depth))
}

/// Lifts an image grasp into the world. The closing direction is rotated with
/// the camera and projected onto the world x-y plane; the opening is converted
/// with similar triangles at the grasp depth.
pub fn grasp_image_to_world(g: &GraspImage, depth: f64, cam: &CameraModel) -> Result<GraspWorld> {
    let pc = image_to_camera(g.u, g.v, depth, cam)?;
    let pw = cam.pose_world_from_camera * pc;
    let (s, c) = g.angle.sin_cos();
    let dir = cam.pose_world_from_camera.rotation * Vector3::new(c / cam.fx, s / cam.fy, 0.0);
    let angle = if dir.x == 0.0 && dir.y == 0.0 { 0.0 } else { wrap(dir.y.atan2(dir.x)) };
    Ok(GraspWorld {
        x: pw.x,
        y: pw.y,
        z: pw.z,
        angle,
        width: g.width * depth / cam.fx,
        quality: g.quality,
    })
}
