use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use ndarray::Array2;
use walkdir::WalkDir;

use super::io::{read_depth_tiff, read_rgb};
use super::sample::GraspSample;
use crate::error::{Error, IoContext, Result};
use crate::grasp::{grasp_from_rect, GraspRectangle, Point};

/// Loads every `pcdNNNNr.png` under `root` (recursively), center-cropped to
/// `crop_size`. Samples without annotations, depth or surviving rectangles are
/// skipped with a warning. Object ids come from the dataset's `z.txt` index
/// when present.
pub fn load_cornell(root: &Path, crop_size: usize) -> Result<Vec<GraspSample>> {
    if !root.is_dir() {
        return Err(Error::FileNotFound(root.to_path_buf()));
    }
    let mut images: Vec<(u32, PathBuf)> = Vec::new();
    let mut index_file = None;
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| Error::Parse(e.to_string()))?;
        let name = entry.file_name().to_string_lossy();
        if name == "z.txt" {
            index_file = Some(entry.path().to_path_buf());
        } else if let Some(n) = image_number(&name) {
            images.push((n, entry.path().to_path_buf()));
        }
    }
    images.sort();
    let objects = match &index_file {
        Some(p) => parse_object_index(&fs::read_to_string(p).at(p)?),
        None => HashMap::new(),
    };

    let mut samples = Vec::new();
    for (n, rgb_path) in images {
        match load_one(n, &rgb_path, crop_size, &objects) {
            Ok(Some(s)) => samples.push(s),
            Ok(None) => {}
            Err(e) => warn!("skipping pcd{n:04}: {e}"),
        }
    }
    Ok(samples)
}

fn image_number(name: &str) -> Option<u32> {
    let digits = name.strip_prefix("pcd")?.strip_suffix("r.png")?;
    (digits.len() == 4 && digits.bytes().all(|b| b.is_ascii_digit())).then(|| digits.parse().ok())?
}

fn load_one(n: u32, rgb_path: &Path, crop_size: usize, objects: &HashMap<u32, String>) -> Result<Option<GraspSample>> {
    let dir = rgb_path.parent().unwrap_or(Path::new("."));
    let stem = format!("pcd{n:04}");
    let cpos = dir.join(format!("{stem}cpos.txt"));
    if !cpos.exists() {
        warn!("skipping {stem}: no annotation file");
        return Ok(None);
    }
    let rgb = read_rgb(rgb_path)?;
    let (h, w, _) = rgb.dim();
    let tiff = dir.join(format!("{stem}d.tiff"));
    let cloud = dir.join(format!("{stem}.txt"));
    let depth = if tiff.exists() {
        read_depth_tiff(&tiff)?
    } else if cloud.exists() {
        depth_from_point_cloud(&fs::read_to_string(&cloud).at(&cloud)?, h, w)?
    } else {
        warn!("skipping {stem}: no depth image or point cloud");
        return Ok(None);
    };
    if depth.dim() != (h, w) {
        return Err(Error::Shape(format!("depth {:?} vs rgb {:?}", depth.dim(), (h, w))));
    }
    let rectangles = parse_cornell_rectangles(&fs::read_to_string(&cpos).at(&cpos)?);
    let full = GraspSample { id: stem.clone(), rgb, depth, rectangles, object_id: objects.get(&n).cloned() };
    let cropped = full.center_crop(crop_size)?;
    if cropped.rectangles.is_empty() {
        warn!("skipping {stem}: no rectangles inside the crop");
        return Ok(None);
    }
    Ok(Some(cropped))
}

/// Groups of four `x y` corner lines. Groups containing NaN or unparsable
/// values are dropped, as are degenerate ones.
pub fn parse_cornell_rectangles(text: &str) -> Vec<GraspRectangle> {
    let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    lines
        .chunks_exact(4)
        .filter_map(|group| {
            let mut corners: [Point; 4] = [[0.0; 2]; 4];
            for (c, line) in corners.iter_mut().zip(group) {
                let mut it = line.split_whitespace().map(str::parse::<f64>);
                *c = [it.next()?.ok()?, it.next()?.ok()?];
            }
            grasp_from_rect(&corners).ok()
        })
        .collect()
}

/// Range image from the ASCII point cloud: distance to the sensor in meters
/// (the cloud is in millimeters), placed at the pixel named by its index column.
pub fn depth_from_point_cloud(text: &str, h: usize, w: usize) -> Result<Array2<f32>> {
    let mut depth = Array2::zeros((h, w));
    let mut in_data = false;
    for line in text.lines() {
        let line = line.trim();
        if !in_data {
            in_data = line.starts_with("DATA");
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 4 {
            continue;
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad point cloud value `{s}`")));
        let (x, y, z) = (parse(f[0])?, parse(f[1])?, parse(f[2])?);
        let idx = parse(f[f.len() - 1])? as usize;
        let (r, c) = (idx / w, idx % w);
        if r < h {
            depth[[r, c]] = ((x * x + y * y + z * z).sqrt() / 1000.0) as f32;
        }
    }
    if !in_data {
        return Err(Error::Parse("point cloud has no DATA section".into()));
    }
    Ok(depth)
}

/// `z.txt`: one line per image, image number then object id.
pub fn parse_object_index(text: &str) -> HashMap<u32, String> {
    text.lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            let n = it.next()?.parse().ok()?;
            Some((n, it.next()?.to_string()))
        })
        .collect()
}
