use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{resize, FilterType};
use log::warn;
use ndarray::{Array2, Array3};
use walkdir::WalkDir;

use super::io::{read_depth_tiff, read_rgb};
use super::sample::GraspSample;
use crate::error::{Error, IoContext, Result};
use crate::grasp::GraspRectangle;

const GRASPS_SUFFIX: &str = "_grasps.txt";

/// Loads every `<scene>/<id>_grasps.txt` under `root` with its `_RGB.png` and
/// `_perfect_depth.tiff`. Images are scaled so the short side equals
/// `crop_size`, then center-cropped. The scene directory name is the object id.
pub fn load_jacquard(root: &Path, crop_size: usize) -> Result<Vec<GraspSample>> {
    if !root.is_dir() {
        return Err(Error::FileNotFound(root.to_path_buf()));
    }
    let mut grasp_files: Vec<PathBuf> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(GRASPS_SUFFIX))
        .map(|e| e.into_path())
        .collect();
    grasp_files.sort();
    let mut samples = Vec::new();
    for path in grasp_files {
        match load_one(&path, crop_size) {
            Ok(Some(s)) => samples.push(s),
            Ok(None) => {}
            Err(e) => warn!("skipping {}: {e}", path.display()),
        }
    }
    Ok(samples)
}

fn load_one(grasps: &Path, crop_size: usize) -> Result<Option<GraspSample>> {
    let name = grasps.file_name().unwrap_or_default().to_string_lossy();
    let id = name.trim_end_matches(GRASPS_SUFFIX).to_string();
    let dir = grasps.parent().unwrap_or(Path::new("."));
    let scene = dir.file_name().map(|s| s.to_string_lossy().into_owned());
    let rectangles: Vec<GraspRectangle> = fs::read_to_string(grasps)
        .at(grasps)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .filter_map(|l| match parse_jacquard_line(l) {
            Ok(r) => Some(r),
            Err(e) => {
                warn!("{id}: {e}");
                None
            }
        })
        .collect();
    if rectangles.is_empty() {
        warn!("skipping {id}: no grasps");
        return Ok(None);
    }
    let depth_path = dir.join(format!("{id}_perfect_depth.tiff"));
    let depth = match read_depth_tiff(&depth_path) {
        Ok(d) => d,
        Err(e) => {
            warn!("skipping {id}: unreadable depth ({e})");
            return Ok(None);
        }
    };
    let rgb = read_rgb(&dir.join(format!("{id}_RGB.png")))?;
    if rgb.dim().0 != depth.nrows() || rgb.dim().1 != depth.ncols() {
        return Err(Error::Shape(format!("rgb {:?} vs depth {:?}", rgb.dim(), depth.dim())));
    }
    let full = GraspSample { id, rgb, depth, rectangles, object_id: scene };
    let scaled = scale_short_side(&full, crop_size)?;
    let cropped = scaled.center_crop(crop_size)?;
    if cropped.rectangles.is_empty() {
        warn!("skipping {}: no rectangles inside the crop", cropped.id);
        return Ok(None);
    }
    Ok(Some(cropped))
}

/// `u;v;theta_degrees;opening;jaw`.
pub fn parse_jacquard_line(line: &str) -> Result<GraspRectangle> {
    let f: Vec<f64> = line
        .split(';')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Parse(format!("bad grasp line `{line}`")))?;
    if f.len() != 5 || f.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse(format!("grasp line needs five finite fields: `{line}`")));
    }
    Ok(GraspRectangle::new([f[0], f[1]], f[2].to_radians(), f[3], f[4]))
}

/// Resizes so that the shorter image side becomes `size`: bilinear for color,
/// nearest for depth so invalid pixels never blend into valid ones.
pub fn scale_short_side(s: &GraspSample, size: usize) -> Result<GraspSample> {
    let (h, w) = s.depth.dim();
    let short = h.min(w);
    if short == size {
        return Ok(s.clone());
    }
    let k = size as f64 / short as f64;
    let (nh, nw) = (((h as f64) * k).round() as usize, ((w as f64) * k).round() as usize);
    let img = image::RgbImage::from_raw(w as u32, h as u32, s.rgb.iter().copied().collect())
        .ok_or_else(|| Error::Shape("rgb buffer".into()))?;
    let rgb = Array3::from_shape_vec((nh, nw, 3), resize(&img, nw as u32, nh as u32, FilterType::Triangle).into_raw())
        .map_err(|e| Error::Shape(e.to_string()))?;
    let src = |x: usize, n: usize| ((((x as f64) + 0.5) / k - 0.5).round().max(0.0) as usize).min(n - 1);
    let depth = Array2::from_shape_fn((nh, nw), |(v, u)| s.depth[[src(v, h), src(u, w)]]);
    let map = |p: f64| (p + 0.5) * k - 0.5;
    let rectangles = s
        .rectangles
        .iter()
        .map(|r| GraspRectangle { center: [map(r.center[0]), map(r.center[1])], ..r.scaled(k) })
        .collect();
    Ok(GraspSample { id: s.id.clone(), rgb, depth, rectangles, object_id: s.object_id.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn parses_annotation_line() {
        let r = parse_jacquard_line("512;384;45;100;40").unwrap();
        assert_eq!(r.center, [512.0, 384.0]);
        assert!((r.angle - FRAC_PI_4).abs() < 1e-12);
        assert_eq!((r.width, r.height), (100.0, 40.0));
    }

    #[test]
    fn half_turn_wraps_to_zero() {
        let r = parse_jacquard_line("1;2;180;10;5").unwrap();
        assert!(r.angle.abs() < 1e-12);
        assert!(parse_jacquard_line("1;2;3").is_err());
        assert!(parse_jacquard_line("1;2;x;4;5").is_err());
    }
}
