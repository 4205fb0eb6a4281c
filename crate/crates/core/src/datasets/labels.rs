use crate::error::{Error, Result};
use crate::grasp::{GraspMaps, GraspRectangle};

/// Default pixel scale for the width plane.
pub const WIDTH_SCALE: f64 = 150.0;

/// Paints the central third (along the closing axis) of every rectangle.
/// Later rectangles overwrite earlier ones.
pub fn rasterize_labels(rects: &[GraspRectangle], h: usize, w: usize, width_scale: f64) -> Result<GraspMaps> {
    if !(width_scale > 0.0) {
        return Err(Error::InvalidArgument(format!("width scale must be positive, got {width_scale}")));
    }
    let mut maps = GraspMaps::zeros(h, w);
    for r in rects {
        paint(&mut maps, r, 1.0, width_scale);
    }
    Ok(maps)
}

/// The painted band of `r`: a third of its width, its full height.
pub fn label_band(r: &GraspRectangle) -> GraspRectangle {
    GraspRectangle { width: r.width / 3.0, ..*r }
}

pub(crate) fn paint(maps: &mut GraspMaps, r: &GraspRectangle, quality: f32, width_scale: f64) {
    let (h, w) = maps.dim();
    let band = label_band(r);
    let (lo, hi) = band.bounds();
    let u0 = lo[0].floor().max(0.0) as usize;
    let v0 = lo[1].floor().max(0.0) as usize;
    let u1 = (hi[0].ceil().min(w as f64 - 1.0)).max(-1.0);
    let v1 = (hi[1].ceil().min(h as f64 - 1.0)).max(-1.0);
    if u1 < 0.0 || v1 < 0.0 {
        return;
    }
    let (s2, c2) = (2.0 * r.angle).sin_cos();
    let wv = (r.width / width_scale).clamp(0.0, 1.0) as f32;
    for v in v0..=v1 as usize {
        for u in u0..=u1 as usize {
            if band.contains([u as f64, v as f64]) {
                maps.quality[[v, u]] = quality;
                maps.angle_sin[[v, u]] = s2 as f32;
                maps.angle_cos[[v, u]] = c2 as f32;
                maps.width[[v, u]] = wv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn empty_list_gives_zero_maps() {
        let m = rasterize_labels(&[], 20, 30, WIDTH_SCALE).unwrap();
        assert_eq!(m, GraspMaps::zeros(20, 30));
    }

    #[test]
    fn central_third_band() {
        let r = GraspRectangle::new([50.0, 50.0], 0.0, 30.0, 12.0);
        let m = rasterize_labels(&[r], 100, 100, WIDTH_SCALE).unwrap();
        let cols: Vec<usize> = (0..100).filter(|&u| m.quality[[50, u]] == 1.0).collect();
        assert_eq!(cols, (45..55).collect::<Vec<_>>());
        let rows: Vec<usize> = (0..100).filter(|&v| m.quality[[v, 50]] == 1.0).collect();
        assert_eq!(rows.len(), 12);
        assert_eq!(m.quality.sum(), 120.0);
        assert!((m.width[[50, 50]] - 0.2).abs() < 1e-7);
        assert_eq!(m.angle_cos[[50, 50]], 1.0);
        assert_eq!(m.angle_sin[[10, 10]], 0.0);
    }

    #[test]
    fn diagonal_angle_planes() {
        let r = GraspRectangle::new([30.0, 30.0], FRAC_PI_4, 30.0, 12.0);
        let m = rasterize_labels(&[r], 60, 60, WIDTH_SCALE).unwrap();
        assert_eq!(m.quality[[30, 30]], 1.0);
        assert!((m.angle_sin[[30, 30]] - 1.0).abs() < 1e-7);
        assert!(m.angle_cos[[30, 30]].abs() < 1e-7);
    }

    #[test]
    fn later_rectangles_win() {
        let a = GraspRectangle::new([30.0, 30.0], 0.0, 30.0, 12.0);
        let b = GraspRectangle::new([30.0, 30.0], FRAC_PI_4, 60.0, 12.0);
        let m = rasterize_labels(&[a, b], 60, 60, WIDTH_SCALE).unwrap();
        assert!((m.width[[30, 30]] - 0.4).abs() < 1e-7);
        assert!(rasterize_labels(&[a], 10, 10, 0.0).is_err());
    }
}
