use ndarray::Array2;

use crate::error::{Error, Result};

/// Per-pixel grasp planes. Quality in `[0, 1]`, the angle encoded as
/// `(sin 2phi, cos 2phi)`, width normalized by a pixel scale.
#[derive(Clone, Debug, PartialEq)]
pub struct GraspMaps {
    pub quality: Array2<f32>,
    pub angle_sin: Array2<f32>,
    pub angle_cos: Array2<f32>,
    pub width: Array2<f32>,
}

impl GraspMaps {
    pub fn zeros(h: usize, w: usize) -> Self {
        let z = Array2::zeros((h, w));
        Self { quality: z.clone(), angle_sin: z.clone(), angle_cos: z.clone(), width: z }
    }

    pub fn from_planes(quality: Array2<f32>, angle_sin: Array2<f32>, angle_cos: Array2<f32>, width: Array2<f32>) -> Result<Self> {
        let dim = quality.dim();
        if angle_sin.dim() != dim || angle_cos.dim() != dim || width.dim() != dim {
            return Err(Error::Shape(format!(
                "grasp planes differ in shape: {:?} {:?} {:?} {:?}",
                dim,
                angle_sin.dim(),
                angle_cos.dim(),
                width.dim()
            )));
        }
        Ok(Self { quality, angle_sin, angle_cos, width })
    }

    /// `(rows, cols)`.
    pub fn dim(&self) -> (usize, usize) {
        self.quality.dim()
    }

    pub fn planes(&self) -> [&Array2<f32>; 4] {
        [&self.quality, &self.angle_sin, &self.angle_cos, &self.width]
    }

    pub fn planes_mut(&mut self) -> [&mut Array2<f32>; 4] {
        [&mut self.quality, &mut self.angle_sin, &mut self.angle_cos, &mut self.width]
    }

    /// Decoded angle at a pixel, wrapped into `[-pi/2, pi/2)`.
    pub fn angle_at(&self, row: usize, col: usize) -> f64 {
        decode_angle(self.angle_sin[[row, col]], self.angle_cos[[row, col]])
    }
}

pub fn decode_angle(sin2: f32, cos2: f32) -> f64 {
    super::wrap(0.5 * (sin2 as f64).atan2(cos2 as f64))
}
