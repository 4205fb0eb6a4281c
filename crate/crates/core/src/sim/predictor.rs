use ndarray::{Array2, Array3};

use super::scene::Scene;
use crate::datasets::{normalize_inputs, rasterize_labels, GraspSample, Modality};
use crate::error::{Error, Result};
use crate::evaluation::NetworkOutput;
use crate::grasp::{CameraModel, GraspMaps};
use crate::network::{batch_inputs, Network};

/// What a predictor sees on one tick. The scene is ground truth and only the
/// oracle reads it.
pub struct Observation<'a> {
    pub scene: &'a Scene,
    pub cam: &'a CameraModel,
    pub depth: &'a Array2<f32>,
    pub rgb: &'a Array3<u8>,
}

/// Produces quality, angle and width maps (quality in `[0, 1]`) for one frame.
pub trait Predictor {
    fn name(&self) -> &str;
    fn predict(&mut self, obs: &Observation<'_>) -> Result<GraspMaps>;
}

/// Paints the analytic grasp of every visible object, as training labels would.
pub fn oracle_predict(scene: &Scene, cam: &CameraModel, h: usize, w: usize, width_scale: f64) -> Result<GraspMaps> {
    let rects: Vec<_> = scene.objects.iter().filter_map(|o| o.image_rectangle(cam, 0.0)).collect();
    rasterize_labels(&rects, h, w, width_scale)
}

#[derive(Clone, Debug)]
pub struct OraclePredictor {
    pub width_scale: f64,
}

impl Predictor for OraclePredictor {
    fn name(&self) -> &str {
        "oracle"
    }

    fn predict(&mut self, obs: &Observation<'_>) -> Result<GraspMaps> {
        let (h, w) = obs.depth.dim();
        oracle_predict(obs.scene, obs.cam, h, w, self.width_scale)
    }
}

/// Always returns empty maps.
#[derive(Clone, Copy, Debug, Default)]
pub struct EmptyPredictor;

impl Predictor for EmptyPredictor {
    fn name(&self) -> &str {
        "empty"
    }

    fn predict(&mut self, obs: &Observation<'_>) -> Result<GraspMaps> {
        let (h, w) = obs.depth.dim();
        Ok(GraspMaps::zeros(h, w))
    }
}

/// A trained network run on the rendered images.
pub struct ModelPredictor {
    pub net: Network<f32>,
    pub modality: Modality,
}

impl ModelPredictor {
    pub fn new(net: Network<f32>, modality: Modality) -> Result<Self> {
        if net.config().input_channels != modality.channels() {
            return Err(Error::Config(format!(
                "checkpoint takes {} input channels but modality {modality} has {}",
                net.config().input_channels,
                modality.channels()
            )));
        }
        Ok(Self { net, modality })
    }
}

impl Predictor for ModelPredictor {
    fn name(&self) -> &str {
        "model"
    }

    fn predict(&mut self, obs: &Observation<'_>) -> Result<GraspMaps> {
        let sample = GraspSample {
            id: "frame".into(),
            rgb: obs.rgb.clone(),
            depth: obs.depth.clone(),
            rectangles: Vec::new(),
            object_id: None,
        };
        let x = batch_inputs(&[&normalize_inputs(&sample, self.modality)?])?;
        let out = self.net.infer(&x)?;
        Ok(NetworkOutput::from_batch(&out)?.remove(0).activate())
    }
}
