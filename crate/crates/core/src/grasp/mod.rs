//! Grasp representations, rectangle geometry and frame transforms.

mod angle;
mod camera;
mod iou;
mod maps;
mod rect;

use serde::{Deserialize, Serialize};

pub use angle::{angle_error, angle_offset, wrap, wrap_angle};
pub use camera::{grasp_image_to_world, image_to_camera, CameraModel};
pub use iou::rect_iou;
pub use maps::{decode_angle, GraspMaps};
pub use rect::{grasp_from_rect, rect_from_grasp, rectangularity_residual, signed_area2, GraspRectangle, Point};

/// A planar grasp in pixel coordinates: center `(u, v)`, closing angle, opening in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspImage {
    pub u: f64,
    pub v: f64,
    pub angle: f64,
    pub width: f64,
    pub quality: f64,
}

/// A top-down grasp in the world frame (meters, angle about world z).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspWorld {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub angle: f64,
    pub width: f64,
    pub quality: f64,
}

impl GraspWorld {
    pub fn position(&self) -> nalgebra::Vector3<f64> {
        nalgebra::Vector3::new(self.x, self.y, self.z)
    }
}
