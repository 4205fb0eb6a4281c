use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use nalgebra::Point3;
use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::grasp::{wrap, CameraModel, GraspRectangle, GraspWorld};
use crate::toml_file::from_toml;

/// An extruded rectangular block resting on the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: String,
    /// Table-plane position in meters.
    pub center: [f64; 2],
    pub yaw: f64,
    /// Half sizes along the object's local x and y axes.
    pub half_extents: [f64; 2],
    pub height: f64,
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default)]
    pub angular_velocity: f64,
}

impl SceneObject {
    pub fn block(id: &str, center: [f64; 2], yaw: f64, half_extents: [f64; 2], height: f64) -> Self {
        Self { id: id.to_string(), center, yaw, half_extents, height, velocity: [0.0; 2], angular_velocity: 0.0 }
    }

    pub fn with_velocity(mut self, velocity: [f64; 2], angular_velocity: f64) -> Self {
        self.velocity = velocity;
        self.angular_velocity = angular_velocity;
        self
    }

    /// World point expressed in the object's local frame.
    pub fn local(&self, x: f64, y: f64) -> [f64; 2] {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (x - self.center[0], y - self.center[1]);
        [c * dx + s * dy, -s * dx + c * dy]
    }

    /// Inside the top face, boundary included.
    pub fn covers(&self, x: f64, y: f64) -> bool {
        let [lx, ly] = self.local(x, y);
        lx.abs() <= self.half_extents[0] && ly.abs() <= self.half_extents[1]
    }

    /// World-frame closing direction: across the narrow side of the block.
    pub fn closing_angle(&self) -> f64 {
        if self.half_extents[0] <= self.half_extents[1] {
            wrap(self.yaw)
        } else {
            wrap(self.yaw + FRAC_PI_2)
        }
    }

    /// Full size along the closing direction.
    pub fn closing_extent(&self) -> f64 {
        2.0 * self.half_extents[0].min(self.half_extents[1])
    }

    pub fn long_extent(&self) -> f64 {
        2.0 * self.half_extents[0].max(self.half_extents[1])
    }

    /// The analytic best grasp: top-face center, across the narrow axis.
    pub fn best_grasp(&self) -> GraspWorld {
        GraspWorld {
            x: self.center[0],
            y: self.center[1],
            z: self.height,
            angle: self.closing_angle(),
            width: self.closing_extent(),
            quality: 1.0,
        }
    }

    /// Pixel rectangle of a grasp at `offset` meters along the long axis,
    /// spanning the closing extent and half of it along the jaws.
    pub fn image_rectangle(&self, cam: &CameraModel, offset: f64) -> Option<GraspRectangle> {
        let a = self.closing_angle();
        let (s, c) = a.sin_cos();
        let (ls, lc) = (a + FRAC_PI_2).sin_cos();
        let p = Point3::new(self.center[0] + offset * lc, self.center[1] + offset * ls, self.height);
        let half = self.closing_extent() / 2.0;
        let (u0, v0, _) = cam.project(&Point3::new(p.x - half * c, p.y - half * s, p.z))?;
        let (u1, v1, _) = cam.project(&Point3::new(p.x + half * c, p.y + half * s, p.z))?;
        let (u, v, _) = cam.project(&p)?;
        let width = (u1 - u0).hypot(v1 - v0);
        Some(GraspRectangle::new([u, v], (v1 - v0).atan2(u1 - u0), width, width / 2.0))
    }
}

/// Rectangle on the table plane that object centers stay inside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Default for Workspace {
    fn default() -> Self {
        Self { min: [-0.12, -0.12], max: [0.12, 0.12] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default = "default_camera_height")]
    pub camera_height: f64,
    #[serde(default)]
    pub workspace: Workspace,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
    #[serde(default)]
    pub time: f64,
}

fn default_camera_height() -> f64 {
    0.5
}

impl Default for Scene {
    fn default() -> Self {
        Self { camera_height: default_camera_height(), workspace: Workspace::default(), objects: Vec::new(), time: 0.0 }
    }
}

impl Scene {
    pub fn with_objects(objects: Vec<SceneObject>) -> Self {
        Self { objects, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.camera_height > 0.0) {
            return Err(Error::Config(format!("camera_height must be positive, got {}", self.camera_height)));
        }
        for o in &self.objects {
            if !(o.half_extents[0] > 0.0 && o.half_extents[1] > 0.0 && o.height > 0.0) {
                return Err(Error::Config(format!("object {} needs positive extents and height", o.id)));
            }
            if o.height >= self.camera_height {
                return Err(Error::Config(format!("object {} reaches the camera", o.id)));
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Scene = from_toml(text, "scene")?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).at(path)?;
        let s: Scene = from_toml(&text, &path.display().to_string())?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    /// Object whose best grasp center is nearest to `(x, y)`.
    pub fn nearest_object(&self, x: f64, y: f64) -> Option<&SceneObject> {
        self.objects.iter().min_by(|a, b| {
            let da = (a.center[0] - x).hypot(a.center[1] - y);
            let db = (b.center[0] - x).hypot(b.center[1] - y);
            da.total_cmp(&db)
        })
    }

    /// Camera fixed above the workspace origin, looking straight down.
    pub fn camera(&self, fx: f64, size: usize) -> Result<CameraModel> {
        CameraModel::looking_down(self.camera_height, fx, size, size)
    }
}

/// Advances every object by one explicit Euler step. Centers that would
/// leave the workspace are mirrored back and that velocity component flips.
pub fn step_scene(scene: &Scene, dt: f64) -> Scene {
    let mut next = scene.clone();
    next.time += dt;
    for o in &mut next.objects {
        for axis in 0..2 {
            let mut p = o.center[axis] + o.velocity[axis] * dt;
            let (lo, hi) = (scene.workspace.min[axis], scene.workspace.max[axis]);
            if p > hi && o.velocity[axis] > 0.0 {
                p = 2.0 * hi - p;
                o.velocity[axis] = -o.velocity[axis];
            } else if p < lo && o.velocity[axis] < 0.0 {
                p = 2.0 * lo - p;
                o.velocity[axis] = -o.velocity[axis];
            }
            o.center[axis] = p;
        }
        o.yaw += o.angular_velocity * dt;
    }
    next
}

/// Camera-frame depth of the first surface along each pixel ray: an object
/// top or the table plane at `z = 0`.
pub fn render_depth(scene: &Scene, cam: &CameraModel, h: usize, w: usize) -> Array2<f32> {
    let origin = cam.origin();
    Array2::from_shape_fn((h, w), |(v, u)| {
        let dir = cam.ray(u as f64, v as f64);
        if dir.z >= 0.0 {
            return 0.0;
        }
        let mut best = origin.z / -dir.z;
        for o in &scene.objects {
            let t = (origin.z - o.height) / -dir.z;
            if t > 0.0 && t < best {
                let p = origin + dir * t;
                if o.covers(p.x, p.y) {
                    best = t;
                }
            }
        }
        best as f32
    })
}

/// Flat-shaded color image matching [`render_depth`]: gray table, one hue per
/// object, darker towards the block edges.
pub fn render_rgb(scene: &Scene, cam: &CameraModel, h: usize, w: usize) -> Array3<u8> {
    const PALETTE: [[f64; 3]; 6] =
        [[200.0, 60.0, 50.0], [50.0, 140.0, 210.0], [230.0, 180.0, 40.0], [70.0, 170.0, 90.0], [160.0, 80.0, 190.0], [240.0, 120.0, 40.0]];
    let origin = cam.origin();
    let mut img = Array3::from_elem((h, w, 3), 0u8);
    for v in 0..h {
        for u in 0..w {
            let dir = cam.ray(u as f64, v as f64);
            let mut color = [120.0, 118.0, 112.0];
            let mut best = if dir.z < 0.0 { origin.z / -dir.z } else { f64::INFINITY };
            for (i, o) in scene.objects.iter().enumerate() {
                let t = (origin.z - o.height) / -dir.z;
                if dir.z < 0.0 && t > 0.0 && t < best {
                    let p = origin + dir * t;
                    if o.covers(p.x, p.y) {
                        best = t;
                        let [lx, ly] = o.local(p.x, p.y);
                        let edge = (lx.abs() / o.half_extents[0]).max(ly.abs() / o.half_extents[1]);
                        let shade = 1.0 - 0.35 * edge.powi(4);
                        color = PALETTE[i % PALETTE.len()].map(|c| c * shade);
                    }
                }
            }
            for c in 0..3 {
                img[[v, u, c]] = color[c].round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    img
}
