use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use ndarray::{Array2, Array3};

use super::decode::DecodedMaps;
use super::metric::predicted_rectangle;
use crate::error::{Error, IoContext, Result};
use crate::grasp::GraspImage;

/// Outline color for grasp rectangles; the overlay background is gray, so
/// this color only appears on outlines.
pub const OUTLINE: [u8; 3] = [0, 255, 0];

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedFiles {
    pub quality: PathBuf,
    pub angle: PathBuf,
    pub width: PathBuf,
    pub overlay: PathBuf,
}

impl RenderedFiles {
    pub fn all(&self) -> [&PathBuf; 4] {
        [&self.quality, &self.angle, &self.width, &self.overlay]
    }
}

const VIRIDIS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

/// Maps `t` in `[0, 1]` onto a perceptually ordered palette.
pub fn colormap(t: f64) -> [u8; 3] {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let mut out = [0u8; 3];
    for (c, o) in out.iter_mut().enumerate() {
        *o = (VIRIDIS[i][c] * (1.0 - f) + VIRIDIS[i + 1][c] * f).round() as u8;
    }
    out
}

/// Min-max normalized color image of a plane; a constant plane renders in the
/// lowest color. Returns the image and the plane's `(min, max)`.
pub fn plane_to_image(plane: &Array2<f32>) -> (RgbImage, (f32, f32)) {
    let (h, w) = plane.dim();
    let min = plane.iter().copied().filter(|v| v.is_finite()).fold(f32::INFINITY, f32::min);
    let max = plane.iter().copied().filter(|v| v.is_finite()).fold(f32::NEG_INFINITY, f32::max);
    let (min, max) = if min.is_finite() { (min, max) } else { (0.0, 0.0) };
    let span = (max - min) as f64;
    let img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let v = plane[[y as usize, x as usize]];
        let t = if span > 0.0 { (v - min) as f64 / span } else { 0.0 };
        Rgb(colormap(t))
    });
    (img, (min, max))
}

/// Gray rendering of a depth plane, near is bright.
pub fn depth_to_rgb(depth: &Array2<f32>) -> Array3<u8> {
    let valid = depth.iter().copied().filter(|v| v.is_finite() && *v > 0.0);
    let (min, max) = valid.fold((f32::INFINITY, f32::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if max > min { max - min } else { 1.0 };
    let (h, w) = depth.dim();
    Array3::from_shape_fn((h, w, 3), |(r, c, _)| {
        let d = depth[[r, c]];
        if d.is_finite() && d > 0.0 {
            (255.0 * (1.0 - (d - min) / span)).round() as u8
        } else {
            0
        }
    })
}

/// Bresenham line, clipped to the image.
pub fn draw_line(img: &mut RgbImage, a: [f64; 2], b: [f64; 2], color: [u8; 3]) {
    let (mut x0, mut y0) = (a[0].round() as i64, a[1].round() as i64);
    let (x1, y1) = (b[0].round() as i64, b[1].round() as i64);
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let mut err = dx + dy;
    loop {
        if x0 >= 0 && y0 >= 0 && (x0 as u32) < img.width() && (y0 as u32) < img.height() {
            img.put_pixel(x0 as u32, y0 as u32, Rgb(color));
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Grayscale copy of `input` with every grasp drawn as a rectangle outline.
pub fn overlay_image(input: &Array3<u8>, grasps: &[GraspImage]) -> RgbImage {
    let (h, w, _) = input.dim();
    let mut img = RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (r, c) = (y as usize, x as usize);
        let g = (0.299 * input[[r, c, 0]] as f64 + 0.587 * input[[r, c, 1]] as f64 + 0.114 * input[[r, c, 2]] as f64)
            .round() as u8;
        Rgb([g, g, g])
    });
    for g in grasps {
        let c = predicted_rectangle(g).corners();
        for i in 0..4 {
            draw_line(&mut img, c[i], c[(i + 1) % 4], OUTLINE);
        }
    }
    img
}

/// Writes color-mapped quality, angle and width PNGs (plane min/max in the
/// file names) and an overlay of `grasps` on `input` into `out_dir`.
pub fn render_heatmaps(maps: &DecodedMaps, grasps: &[GraspImage], input: &Array3<u8>, out_dir: &Path) -> Result<RenderedFiles> {
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    if (input.dim().0, input.dim().1) != maps.dim() {
        return Err(Error::Shape(format!("input {:?} vs maps {:?}", input.dim(), maps.dim())));
    }
    let save = |name: &str, plane: &Array2<f32>| -> Result<PathBuf> {
        let (img, (lo, hi)) = plane_to_image(plane);
        let path = out_dir.join(format!("{name}_min{lo:.4}_max{hi:.4}.png"));
        img.save(&path)?;
        Ok(path)
    };
    let quality = save("quality", &maps.quality)?;
    let angle = save("angle", &maps.angle)?;
    let width = save("width", &maps.width)?;
    let overlay = out_dir.join("overlay.png");
    overlay_image(input, grasps).save(&overlay)?;
    Ok(RenderedFiles { quality, angle, width, overlay })
}

/// Parses the `(min, max)` annotation back out of a rendered plane's file name.
pub fn parse_range_from_name(path: &Path) -> Option<(f32, f32)> {
    let stem = path.file_stem()?.to_str()?;
    let (_, rest) = stem.split_once("_min")?;
    let (lo, hi) = rest.split_once("_max")?;
    Some((lo.parse().ok()?, hi.parse().ok()?))
}
