//! Decoding network output into grasps, scoring and reporting.

mod benchmark;
mod decode;
mod metric;
mod peaks;
mod render;

pub use benchmark::{benchmark, measure_timing, write_reports, EvalOptions, EvaluationReport, SampleRecord, TimingReport};
pub use decode::{decode_grasp_maps, decode_maps, gaussian_smooth, DecodedMaps, NetworkOutput};
pub use metric::{
    evaluate_rectangle_metric, match_prediction, predicted_rectangle, MatchResult, MetricThresholds,
    DEFAULT_ANGLE_THRESHOLD_DEG, DEFAULT_IOU_THRESHOLD,
};
pub use peaks::extract_grasps;
pub use render::{
    colormap, depth_to_rgb, draw_line, overlay_image, parse_range_from_name, plane_to_image, render_heatmaps, RenderedFiles,
    OUTLINE,
};
