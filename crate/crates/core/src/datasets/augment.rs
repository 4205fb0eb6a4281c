use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::sample::{inside, GraspSample};

/// Maximum crop-center jitter in pixels.
pub const MAX_JITTER: f64 = 50.0;
/// Zoom is drawn from `[MIN_ZOOM, 1]`; the crop window is `zoom` times the image size.
pub const MIN_ZOOM: f64 = 0.5;
const MAX_TRIES: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AugmentParams {
    pub zoom: f64,
    /// Crop-center shift `(du, dv)` in source pixels.
    pub jitter: (f64, f64),
}

impl AugmentParams {
    pub const IDENTITY: AugmentParams = AugmentParams { zoom: 1.0, jitter: (0.0, 0.0) };

    pub fn sample(rng: &mut impl Rng) -> Self {
        let j = MAX_JITTER as i64;
        AugmentParams {
            zoom: rng.random_range(MIN_ZOOM..=1.0),
            jitter: (rng.random_range(-j..=j) as f64, rng.random_range(-j..=j) as f64),
        }
    }

    /// Source coordinate sampled by output pixel `(u, v)` of an `h x w` image.
    pub fn source(&self, u: f64, v: f64, h: usize, w: usize) -> (f64, f64) {
        let (cu, cv) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        (cu + self.zoom * (u - cu) + self.jitter.0, cv + self.zoom * (v - cv) + self.jitter.1)
    }

    /// Inverse of [`AugmentParams::source`].
    pub fn target(&self, u: f64, v: f64, h: usize, w: usize) -> (f64, f64) {
        let (cu, cv) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
        (cu + (u - cu - self.jitter.0) / self.zoom, cv + (v - cv - self.jitter.1) / self.zoom)
    }
}

/// Nearest-neighbour resampling of a plane through the crop-and-zoom map;
/// pixels sampled from outside the source get `fill`.
pub fn warp_plane<T: Copy>(plane: &Array2<T>, p: &AugmentParams, fill: T) -> Array2<T> {
    let (h, w) = plane.dim();
    Array2::from_shape_fn((h, w), |(v, u)| match lookup(p, u, v, h, w) {
        Some((sv, su)) => plane[[sv, su]],
        None => fill,
    })
}

fn lookup(p: &AugmentParams, u: usize, v: usize, h: usize, w: usize) -> Option<(usize, usize)> {
    let (su, sv) = p.source(u as f64, v as f64, h, w);
    let (su, sv) = (su.round(), sv.round());
    (su >= 0.0 && sv >= 0.0 && su < w as f64 && sv < h as f64).then_some((sv as usize, su as usize))
}

/// Applies one crop-and-zoom to images and rectangles. Rectangles whose
/// centers leave the output are dropped, so the result may have none.
pub fn augment_with(sample: &GraspSample, p: &AugmentParams) -> GraspSample {
    let (h, w) = sample.depth.dim();
    let depth = warp_plane(&sample.depth, p, 0.0);
    let rgb = Array3::from_shape_fn((h, w, 3), |(v, u, c)| match lookup(p, u, v, h, w) {
        Some((sv, su)) => sample.rgb[[sv, su, c]],
        None => 0,
    });
    let rectangles = sample
        .rectangles
        .iter()
        .map(|r| {
            let (u, v) = p.target(r.center[0], r.center[1], h, w);
            let mut out = r.scaled(1.0 / p.zoom);
            out.center = [u, v];
            out
        })
        .filter(|r| inside(r.center, h, w))
        .collect();
    GraspSample { id: sample.id.clone(), rgb, depth, rectangles, object_id: sample.object_id.clone() }
}

/// Random crop-and-zoom, deterministic in `seed`. Draws are repeated (up to ten
/// times) while every rectangle would be pushed out; after that the sample is
/// returned unchanged.
pub fn augment(sample: &GraspSample, seed: u64) -> GraspSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_TRIES {
        let p = AugmentParams::sample(&mut rng);
        let out = augment_with(sample, &p);
        if !out.rectangles.is_empty() {
            return out;
        }
    }
    sample.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grasp::GraspRectangle;

    fn sample() -> GraspSample {
        let depth = Array2::from_shape_fn((64, 64), |(v, u)| 0.5 + (u + 2 * v) as f32 * 1e-3);
        let rgb = Array3::from_shape_fn((64, 64, 3), |(v, u, c)| ((u * 3 + v * 5 + c) % 256) as u8);
        GraspSample {
            id: "s".into(),
            rgb,
            depth,
            rectangles: vec![GraspRectangle::new([30.0, 34.0], 0.3, 20.0, 10.0)],
            object_id: None,
        }
    }

    #[test]
    fn identity_params_leave_sample_unchanged() {
        let s = sample();
        assert_eq!(augment_with(&s, &AugmentParams::IDENTITY), s);
    }

    #[test]
    fn half_zoom_doubles_rectangle_size() {
        let s = sample();
        let out = augment_with(&s, &AugmentParams { zoom: 0.5, jitter: (0.0, 0.0) });
        let r = out.rectangles[0];
        assert!((r.width - 40.0).abs() < 1e-12 && (r.height - 20.0).abs() < 1e-12);
        assert_eq!(r.angle, s.rectangles[0].angle);
    }

    #[test]
    fn seeded_augmentation_is_reproducible() {
        let s = sample();
        assert_eq!(augment(&s, 99), augment(&s, 99));
    }

    #[test]
    fn target_inverts_source() {
        let p = AugmentParams { zoom: 0.7, jitter: (12.0, -31.0) };
        let (u, v) = p.source(10.0, 50.0, 64, 80);
        let (a, b) = p.target(u, v, 64, 80);
        assert!((a - 10.0).abs() < 1e-12 && (b - 50.0).abs() < 1e-12);
    }
}
