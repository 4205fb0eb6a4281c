use ndarray::{s, Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grasp::GraspRectangle;

/// One annotated RGB-D image. `rgb` is `H x W x 3`; depth is in meters with 0
/// marking invalid pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct GraspSample {
    pub id: String,
    pub rgb: Array3<u8>,
    pub depth: Array2<f32>,
    pub rectangles: Vec<GraspRectangle>,
    pub object_id: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "d")]
    Depth,
    #[serde(rename = "rgb")]
    Rgb,
    #[serde(rename = "rgbd")]
    RgbD,
}

impl Modality {
    pub fn channels(self) -> usize {
        match self {
            Modality::Depth => 1,
            Modality::Rgb => 3,
            Modality::RgbD => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Depth => "d",
            Modality::Rgb => "rgb",
            Modality::RgbD => "rgbd",
        }
    }
}

impl std::str::FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d" | "depth" => Ok(Modality::Depth),
            "rgb" => Ok(Modality::Rgb),
            "rgbd" | "rgb-d" => Ok(Modality::RgbD),
            other => Err(Error::Config(format!("unknown modality `{other}` (expected d, rgb or rgbd)"))),
        }
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl GraspSample {
    pub fn height(&self) -> usize {
        self.depth.nrows()
    }

    pub fn width(&self) -> usize {
        self.depth.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::InvalidSample { id: self.id.clone(), reason });
        let (h, w) = self.depth.dim();
        if self.rgb.dim() != (h, w, 3) {
            return bad(format!("rgb {:?} does not match depth {:?}", self.rgb.dim(), (h, w)));
        }
        if self.rectangles.is_empty() {
            return bad("no grasp rectangles".into());
        }
        if let Some(r) = self.rectangles.iter().find(|r| !inside(r.center, h, w)) {
            return bad(format!("rectangle center {:?} outside the image", r.center));
        }
        Ok(())
    }

    /// Crops the `size x size` window with top-left corner `origin = (u, v)` and
    /// keeps only rectangles whose centers stay inside it.
    pub fn crop(&self, origin: (usize, usize), size: usize) -> Result<GraspSample> {
        let (u0, v0) = origin;
        let (h, w) = self.depth.dim();
        if u0 + size > w || v0 + size > h {
            return Err(Error::InvalidSample {
                id: self.id.clone(),
                reason: format!("{size}px crop at {origin:?} exceeds {w}x{h} image"),
            });
        }
        let rectangles = self
            .rectangles
            .iter()
            .map(|r| r.translated(-(u0 as f64), -(v0 as f64)))
            .filter(|r| inside(r.center, size, size))
            .collect();
        Ok(GraspSample {
            id: self.id.clone(),
            rgb: self.rgb.slice(s![v0..v0 + size, u0..u0 + size, ..]).to_owned(),
            depth: self.depth.slice(s![v0..v0 + size, u0..u0 + size]).to_owned(),
            rectangles,
            object_id: self.object_id.clone(),
        })
    }

    /// Center crop; the origin is `((W - S) / 2, (H - S) / 2)` rounded down.
    pub fn center_crop(&self, size: usize) -> Result<GraspSample> {
        let (h, w) = self.depth.dim();
        self.crop((w.saturating_sub(size) / 2, h.saturating_sub(size) / 2), size)
    }
}

/// A pixel-center point lies in the image when it rounds to a valid pixel.
pub(crate) fn inside(p: [f64; 2], h: usize, w: usize) -> bool {
    p[0] >= -0.5 && p[0] < w as f64 - 0.5 && p[1] >= -0.5 && p[1] < h as f64 - 0.5
}
