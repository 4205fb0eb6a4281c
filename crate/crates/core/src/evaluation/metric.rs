use serde::{Deserialize, Serialize};

use crate::grasp::{angle_offset, rect_from_grasp, rect_iou, GraspImage, GraspRectangle};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.25;
pub const DEFAULT_ANGLE_THRESHOLD_DEG: f64 = 30.0;

/// Thresholds of the rectangle metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricThresholds {
    pub iou: f64,
    pub angle: f64,
}

impl Default for MetricThresholds {
    fn default() -> Self {
        Self { iou: DEFAULT_IOU_THRESHOLD, angle: DEFAULT_ANGLE_THRESHOLD_DEG.to_radians() }
    }
}

/// Outcome of scoring one prediction: whether any ground-truth rectangle
/// matched, plus the overlap and angle offset of the best-overlapping one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchResult {
    pub correct: bool,
    pub iou_best: f64,
    pub angle_offset: f64,
}

/// The prediction becomes a rectangle of height `width / 2`.
pub fn predicted_rectangle(pred: &GraspImage) -> GraspRectangle {
    rect_from_grasp(pred, (pred.width / 2.0).max(f64::MIN_POSITIVE)).expect("height is positive")
}

pub fn match_prediction(
    pred: &GraspImage,
    gt: &[GraspRectangle],
    th: MetricThresholds,
    canvas: (usize, usize),
) -> MatchResult {
    let p = predicted_rectangle(pred);
    let mut out = MatchResult { correct: false, iou_best: 0.0, angle_offset: f64::NAN };
    for g in gt {
        let iou = rect_iou(&p, g, canvas);
        let off = angle_offset(p.angle, g.angle).unwrap_or(f64::INFINITY);
        if iou > th.iou && off < th.angle {
            out.correct = true;
        }
        if iou > out.iou_best || out.angle_offset.is_nan() {
            out.iou_best = iou;
            out.angle_offset = off;
        }
    }
    out
}

/// True when some ground-truth rectangle overlaps the prediction by more than
/// `iou_threshold` and differs in angle by less than `angle_threshold` radians.
pub fn evaluate_rectangle_metric(
    pred: &GraspImage,
    gt: &[GraspRectangle],
    iou_threshold: f64,
    angle_threshold: f64,
    canvas: (usize, usize),
) -> bool {
    match_prediction(pred, gt, MetricThresholds { iou: iou_threshold, angle: angle_threshold }, canvas).correct
}
