use std::collections::VecDeque;

use ndarray::{Array2, Array3};

use super::sample::{GraspSample, Modality};
use crate::error::{Error, Result};

/// Replaces invalid (zero or non-finite) depth by the value of the nearest
/// valid pixel in 4-connected steps. Returns `None` when no pixel is valid.
pub fn inpaint_depth(depth: &Array2<f32>) -> Option<Array2<f32>> {
    let (h, w) = depth.dim();
    let valid = |v: f32| v.is_finite() && v > 0.0;
    let mut out = depth.clone();
    let mut seen = Array2::from_elem((h, w), false);
    let mut queue = VecDeque::new();
    for ((r, c), &v) in depth.indexed_iter() {
        if valid(v) {
            seen[[r, c]] = true;
            queue.push_back((r, c));
        }
    }
    if queue.is_empty() {
        return None;
    }
    while let Some((r, c)) = queue.pop_front() {
        let v = out[[r, c]];
        let mut visit = |rr: usize, cc: usize| {
            if !seen[[rr, cc]] {
                seen[[rr, cc]] = true;
                out[[rr, cc]] = v;
                queue.push_back((rr, cc));
            }
        };
        if r > 0 {
            visit(r - 1, c);
        }
        if r + 1 < h {
            visit(r + 1, c);
        }
        if c > 0 {
            visit(r, c - 1);
        }
        if c + 1 < w {
            visit(r, c + 1);
        }
    }
    Some(out)
}

/// Network input planes `C x H x W`. Depth is inpainted, mean-centered and
/// clamped to `[-1, 1]`; color is scaled to `[-0.5, 0.5]`. RGB-D stacks depth first.
pub fn normalize_inputs(sample: &GraspSample, modality: Modality) -> Result<Array3<f32>> {
    let (h, w) = sample.depth.dim();
    let mut out = Array3::zeros((modality.channels(), h, w));
    let mut next = 0;
    if matches!(modality, Modality::Depth | Modality::RgbD) {
        let filled = inpaint_depth(&sample.depth).ok_or_else(|| Error::InvalidSample {
            id: sample.id.clone(),
            reason: "depth plane has no valid pixels".into(),
        })?;
        let mean = filled.iter().map(|&v| v as f64).sum::<f64>() / filled.len() as f64;
        out.index_axis_mut(ndarray::Axis(0), 0)
            .zip_mut_with(&filled, |o, &d| *o = ((d as f64 - mean).clamp(-1.0, 1.0)) as f32);
        next = 1;
    }
    if matches!(modality, Modality::Rgb | Modality::RgbD) {
        if sample.rgb.dim() != (h, w, 3) {
            return Err(Error::Shape(format!("rgb {:?} vs depth {:?}", sample.rgb.dim(), (h, w))));
        }
        for ch in 0..3 {
            let src = sample.rgb.index_axis(ndarray::Axis(2), ch);
            out.index_axis_mut(ndarray::Axis(0), next + ch)
                .zip_mut_with(&src, |o, &v| *o = v as f32 / 255.0 - 0.5);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(depth: Array2<f32>, rgb_value: u8) -> GraspSample {
        let (h, w) = depth.dim();
        GraspSample {
            id: "t".into(),
            rgb: Array3::from_elem((h, w, 3), rgb_value),
            depth,
            rectangles: vec![],
            object_id: None,
        }
    }

    #[test]
    fn constant_depth_normalizes_to_zero() {
        let s = sample(Array2::from_elem((8, 8), 0.73), 0);
        let x = normalize_inputs(&s, Modality::Depth).unwrap();
        assert!(x.iter().all(|&v| v.abs() < 1e-6));
    }

    #[test]
    fn white_rgb_is_half() {
        let s = sample(Array2::from_elem((4, 4), 0.5), 255);
        let x = normalize_inputs(&s, Modality::RgbD).unwrap();
        assert_eq!(x.dim(), (4, 4, 4));
        assert!(x.slice(ndarray::s![1.., .., ..]).iter().all(|&v| v == 0.5));
    }

    #[test]
    fn single_hole_takes_neighbor_value() {
        let mut d = Array2::from_elem((5, 5), 0.6f32);
        d[[2, 2]] = 0.0;
        let filled = inpaint_depth(&d).unwrap();
        assert_eq!(filled[[2, 2]], 0.6);
    }

    #[test]
    fn all_invalid_depth_is_an_error() {
        let s = sample(Array2::zeros((3, 3)), 0);
        assert!(matches!(normalize_inputs(&s, Modality::Depth), Err(Error::InvalidSample { .. })));
        assert!(normalize_inputs(&s, Modality::Rgb).is_ok());
    }
}
