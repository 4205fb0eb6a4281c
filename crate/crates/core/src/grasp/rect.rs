use serde::{Deserialize, Serialize};

use super::angle::wrap;
use super::GraspImage;
use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Oriented grasp rectangle in pixel coordinates. `width` runs along the
/// closing direction `angle`, `height` is the jaw size across it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraspRectangle {
    pub center: Point,
    pub angle: f64,
    pub width: f64,
    pub height: f64,
}

impl GraspRectangle {
    pub fn new(center: Point, angle: f64, width: f64, height: f64) -> Self {
        Self { center, angle: wrap(angle), width, height }
    }

    /// Unit vectors along the closing direction and across it.
    pub fn axes(&self) -> (Point, Point) {
        let (s, c) = self.angle.sin_cos();
        ([c, s], [-s, c])
    }

    /// Counter-clockwise (positive shoelace area) corners; the first edge is the
    /// closing edge.
    pub fn corners(&self) -> [Point; 4] {
        let (d, n) = self.axes();
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        let at = |a: f64, b: f64| [self.center[0] + a * d[0] + b * n[0], self.center[1] + a * d[1] + b * n[1]];
        [at(-hw, -hh), at(hw, -hh), at(hw, hh), at(-hw, hh)]
    }

    /// Zero-width or zero-height rectangles collapse to a segment or point.
    pub fn is_degenerate(&self) -> bool {
        self.width <= 0.0 || self.height <= 0.0
    }

    /// Coordinates of `p` along the closing axis and across it.
    pub fn local(&self, p: Point) -> Point {
        let (d, n) = self.axes();
        let (x, y) = (p[0] - self.center[0], p[1] - self.center[1]);
        [x * d[0] + y * d[1], x * n[0] + y * n[1]]
    }

    /// Half-open membership, so tiled rectangles never double count a pixel.
    pub fn contains(&self, p: Point) -> bool {
        let [t, s] = self.local(p);
        t >= -self.width / 2.0 && t < self.width / 2.0 && s >= -self.height / 2.0 && s < self.height / 2.0
    }

    /// Axis-aligned bounds `(min, max)` of the corners.
    pub fn bounds(&self) -> (Point, Point) {
        let c = self.corners();
        let mut lo = c[0];
        let mut hi = c[0];
        for p in &c[1..] {
            lo = [lo[0].min(p[0]), lo[1].min(p[1])];
            hi = [hi[0].max(p[0]), hi[1].max(p[1])];
        }
        (lo, hi)
    }

    pub fn translated(&self, du: f64, dv: f64) -> Self {
        Self { center: [self.center[0] + du, self.center[1] + dv], ..*self }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            center: [self.center[0] * s, self.center[1] * s],
            width: self.width * s,
            height: self.height * s,
            ..*self
        }
    }

    pub fn to_grasp(&self, quality: f64) -> GraspImage {
        GraspImage {
            u: self.center[0],
            v: self.center[1],
            angle: self.angle,
            width: self.width,
            quality,
        }
    }
}

pub fn rect_from_grasp(g: &GraspImage, height: f64) -> Result<GraspRectangle> {
    if !(height > 0.0) {
        return Err(Error::InvalidArgument(format!("rectangle height must be positive, got {height}")));
    }
    Ok(GraspRectangle::new([g.u, g.v], g.angle, g.width, height))
}

/// Decodes four annotated corners. Edge 0-1 is the closing edge, edge 1-2 the
/// jaw. The result is rebuilt as an exact rectangle, so corner order comes back
/// counter-clockwise whatever the input winding.
pub fn grasp_from_rect(corners: &[Point; 4]) -> Result<GraspRectangle> {
    if corners.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Parse("rectangle corner is not finite".into()));
    }
    let e1 = sub(corners[1], corners[0]);
    let e2 = sub(corners[2], corners[1]);
    let (l1, l2) = (norm(e1), norm(e2));
    let cross = e1[0] * e2[1] - e1[1] * e2[0];
    if l1 == 0.0 || l2 == 0.0 || cross.abs() <= 1e-9 * l1 * l2 {
        return Err(Error::Parse("rectangle corners are collinear".into()));
    }
    let center = [
        corners.iter().map(|p| p[0]).sum::<f64>() / 4.0,
        corners.iter().map(|p| p[1]).sum::<f64>() / 4.0,
    ];
    Ok(GraspRectangle::new(center, e1[1].atan2(e1[0]), l1, l2))
}

/// Largest corner displacement between `corners` and the rectangle decoded
/// from them. Annotations are hand-clicked, so a few tenths of a pixel is normal.
pub fn rectangularity_residual(corners: &[Point; 4]) -> Result<f64> {
    let fit = grasp_from_rect(corners)?.corners();
    let worst = corners
        .iter()
        .map(|&p| fit.iter().map(|&q| norm(sub(p, q))).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(worst)
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Twice the signed area; positive for counter-clockwise order.
pub fn signed_area2(c: &[Point; 4]) -> f64 {
    (0..4)
        .map(|i| {
            let (p, q) = (c[i], c[(i + 1) % 4]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum()
}
