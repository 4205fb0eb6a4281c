use ndarray::{Array2, ArrayView2};
use pixgrasp_nn::{sigmoid, Tensor};

use crate::error::{Error, Result};
use crate::grasp::{decode_angle, GraspMaps};

/// Raw network planes for one image (quality before the sigmoid, width unclamped).
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkOutput {
    pub quality: Array2<f32>,
    pub angle_sin: Array2<f32>,
    pub angle_cos: Array2<f32>,
    pub width: Array2<f32>,
}

impl NetworkOutput {
    /// Splits an `N x 4 x H x W` network output into per-image planes.
    pub fn from_batch(t: &Tensor<f32>) -> Result<Vec<NetworkOutput>> {
        let [n, c, h, w] = t.shape();
        if c != 4 {
            return Err(Error::Shape(format!("network output has {c} channels, expected 4")));
        }
        let plane = |b, ch| Array2::from_shape_vec((h, w), t.plane(b, ch).to_vec()).expect("plane size");
        Ok((0..n)
            .map(|b| NetworkOutput {
                quality: plane(b, 0),
                angle_sin: plane(b, 1),
                angle_cos: plane(b, 2),
                width: plane(b, 3),
            })
            .collect())
    }

    /// Sigmoid on quality; other planes unchanged.
    pub fn activate(&self) -> GraspMaps {
        GraspMaps {
            quality: self.quality.mapv(sigmoid),
            angle_sin: self.angle_sin.clone(),
            angle_cos: self.angle_cos.clone(),
            width: self.width.clone(),
        }
    }
}

/// Per-pixel grasp parameters ready for peak extraction: quality in `[0, 1]`,
/// angle in radians, opening in pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedMaps {
    pub quality: Array2<f32>,
    pub angle: Array2<f32>,
    pub width: Array2<f32>,
}

impl DecodedMaps {
    pub fn dim(&self) -> (usize, usize) {
        self.quality.dim()
    }
}

pub fn decode_maps(raw: &NetworkOutput, width_scale: f64, smooth_sigma: f64) -> DecodedMaps {
    decode_grasp_maps(&raw.activate(), width_scale, smooth_sigma)
}

/// Decodes maps whose quality is already in `[0, 1]` (labels, oracle output,
/// activated network output).
pub fn decode_grasp_maps(maps: &GraspMaps, width_scale: f64, smooth_sigma: f64) -> DecodedMaps {
    let angle = ndarray::Zip::from(&maps.angle_sin)
        .and(&maps.angle_cos)
        .map_collect(|&s, &c| decode_angle(s, c) as f32);
    DecodedMaps {
        quality: gaussian_smooth(maps.quality.view(), smooth_sigma),
        angle,
        width: maps.width.mapv(|w| (w.clamp(0.0, 1.0) as f64 * width_scale) as f32),
    }
}

/// Separable Gaussian blur with edge clamping; `sigma <= 0` returns a copy.
pub fn gaussian_smooth(plane: ArrayView2<f32>, sigma: f64) -> Array2<f32> {
    if !(sigma > 0.0) {
        return plane.to_owned();
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);
    let (h, w) = plane.dim();
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let rows = Array2::from_shape_fn((h, w), |(r, c)| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, &wt)| wt * plane[[r, clamp(c as isize + k as isize - radius, w)]] as f64)
            .sum::<f64>()
    });
    Array2::from_shape_fn((h, w), |(r, c)| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, &wt)| wt * rows[[clamp(r as isize + k as isize - radius, h), c]])
            .sum::<f64>() as f32
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f32::consts::FRAC_PI_4;

    fn raw(sin: f32, cos: f32) -> NetworkOutput {
        let z = Array2::zeros((6, 7));
        NetworkOutput {
            quality: z.clone(),
            angle_sin: Array2::from_elem((6, 7), sin),
            angle_cos: Array2::from_elem((6, 7), cos),
            width: Array2::from_elem((6, 7), 1.5),
        }
    }

    #[test]
    fn angle_decoding() {
        let d = decode_maps(&raw(0.0, 1.0), 150.0, 0.0);
        assert!(d.angle.iter().all(|&a| a == 0.0));
        let d = decode_maps(&raw(1.0, 0.0), 150.0, 0.0);
        assert!(d.angle.iter().all(|&a| (a - FRAC_PI_4).abs() < 1e-7));
        assert!(d.width.iter().all(|&w| w == 150.0));
        assert!(d.quality.iter().all(|&q| q == 0.5));
    }

    #[test]
    fn zero_sigma_is_identity_and_blur_preserves_mass() {
        let mut p = Array2::<f32>::zeros((21, 21));
        p[[10, 10]] = 1.0;
        assert_eq!(gaussian_smooth(p.view(), 0.0), p);
        let s = gaussian_smooth(p.view(), 2.0);
        assert!((s.sum() - 1.0).abs() < 1e-5);
        let max = s.iter().cloned().fold(f32::MIN, f32::max);
        assert_eq!(s[[10, 10]], max);
    }
}
