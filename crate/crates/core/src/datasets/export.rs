use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::io::{write_depth_tiff, write_rgb};
use super::sample::GraspSample;
use crate::error::{IoContext, Result};

/// Writes samples in the Cornell layout: `<dir>/01/pcdNNNN{r.png,d.tiff,cpos.txt}`
/// numbered from 100, plus a `z.txt` object index when samples carry object ids.
pub fn write_cornell(dir: &Path, samples: &[GraspSample]) -> Result<()> {
    let sub = dir.join("01");
    fs::create_dir_all(&sub).at(&sub)?;
    let mut index = String::new();
    for (i, s) in samples.iter().enumerate() {
        let n = 100 + i;
        let stem = sub.join(format!("pcd{n:04}"));
        write_rgb(&stem.with_file_name(format!("pcd{n:04}r.png")), &s.rgb)?;
        write_depth_tiff(&stem.with_file_name(format!("pcd{n:04}d.tiff")), &s.depth)?;
        let mut text = String::new();
        for r in &s.rectangles {
            for [x, y] in r.corners() {
                writeln!(text, "{x:.6} {y:.6}").expect("string write");
            }
        }
        let p = stem.with_file_name(format!("pcd{n:04}cpos.txt"));
        fs::write(&p, text).at(&p)?;
        if let Some(obj) = &s.object_id {
            writeln!(index, "{n} {obj}").expect("string write");
        }
    }
    if !index.is_empty() {
        let p = dir.join("z.txt");
        fs::write(&p, index).at(&p)?;
    }
    Ok(())
}

/// Writes samples in the Jacquard layout: `<dir>/<object>/<id>_{RGB.png,
/// perfect_depth.tiff,grasps.txt}` with `u;v;degrees;opening;jaw` lines.
pub fn write_jacquard(dir: &Path, samples: &[GraspSample]) -> Result<()> {
    for (i, s) in samples.iter().enumerate() {
        let scene = s.object_id.clone().unwrap_or_else(|| format!("scene{i:04}"));
        let sub = dir.join(&scene);
        fs::create_dir_all(&sub).at(&sub)?;
        let id = format!("{i}_{scene}");
        write_rgb(&sub.join(format!("{id}_RGB.png")), &s.rgb)?;
        write_depth_tiff(&sub.join(format!("{id}_perfect_depth.tiff")), &s.depth)?;
        let mut text = String::new();
        for r in &s.rectangles {
            writeln!(
                text,
                "{:.6};{:.6};{:.6};{:.6};{:.6}",
                r.center[0],
                r.center[1],
                r.angle.to_degrees(),
                r.width,
                r.height
            )
            .expect("string write");
        }
        let p = sub.join(format!("{id}_grasps.txt"));
        fs::write(&p, text).at(&p)?;
    }
    Ok(())
}
