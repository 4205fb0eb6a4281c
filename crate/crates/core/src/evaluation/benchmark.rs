use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::decode::{decode_maps, NetworkOutput};
use super::metric::{match_prediction, MetricThresholds};
use super::peaks::extract_grasps;
use crate::datasets::{normalize_inputs, GraspSample, Modality, WIDTH_SCALE};
use crate::error::{Error, IoContext, Result};
use crate::network::{batch_inputs, Network};

/// Dataset-level rectangle-metric accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dataset: String,
    pub modality: String,
    pub input_size: usize,
    pub n_samples: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    /// Mean network forward time per image.
    pub mean_inference_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub correct: bool,
    pub iou_best: f64,
    pub angle_offset_deg: f64,
    pub ms: f64,
}

/// Forward and post-processing latency, reported separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub input_size: usize,
    pub modality: String,
    pub runs: usize,
    pub forward_ms: f64,
    pub decode_ms: f64,
    pub end_to_end_ms: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub width_scale: f64,
    pub smooth_sigma: f64,
    pub iou_threshold: f64,
    pub angle_threshold_deg: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { width_scale: WIDTH_SCALE, smooth_sigma: 2.0, iou_threshold: 0.25, angle_threshold_deg: 30.0 }
    }
}

impl EvalOptions {
    pub fn thresholds(&self) -> MetricThresholds {
        MetricThresholds { iou: self.iou_threshold, angle: self.angle_threshold_deg.to_radians() }
    }
}

/// Scores the top-1 grasp of every sample, one image at a time.
pub fn benchmark(
    net: &Network<f32>,
    samples: &[GraspSample],
    dataset: &str,
    modality: Modality,
    opts: &EvalOptions,
) -> Result<(EvaluationReport, Vec<SampleRecord>)> {
    if net.config().input_channels != modality.channels() {
        return Err(Error::Config(format!(
            "checkpoint takes {} input channels but modality {modality} has {}",
            net.config().input_channels,
            modality.channels()
        )));
    }
    let mut records = Vec::with_capacity(samples.len());
    let mut forward_total = 0.0;
    for s in samples {
        let start = Instant::now();
        let x = batch_inputs(&[&normalize_inputs(s, modality)?])?;
        let t0 = Instant::now();
        let out = net.infer(&x)?;
        forward_total += t0.elapsed().as_secs_f64() * 1e3;
        let raw = NetworkOutput::from_batch(&out)?.remove(0);
        let maps = decode_maps(&raw, opts.width_scale, opts.smooth_sigma);
        let top = extract_grasps(&maps, 1, 1);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let m = top
            .first()
            .map(|g| match_prediction(g, &s.rectangles, opts.thresholds(), maps.dim()));
        records.push(SampleRecord {
            id: s.id.clone(),
            correct: m.is_some_and(|m| m.correct),
            iou_best: m.map_or(0.0, |m| m.iou_best),
            angle_offset_deg: m.map_or(f64::NAN, |m| m.angle_offset.to_degrees()),
            ms,
        });
    }
    let n_correct = records.iter().filter(|r| r.correct).count();
    let n = records.len();
    let report = EvaluationReport {
        dataset: dataset.to_string(),
        modality: modality.name().to_string(),
        input_size: samples.first().map_or(0, |s| s.height()),
        n_samples: n,
        n_correct,
        accuracy: if n == 0 { 0.0 } else { n_correct as f64 / n as f64 },
        mean_inference_ms: if n == 0 { 0.0 } else { forward_total / n as f64 },
    };
    Ok((report, records))
}

/// Times forward and decode+extract on a synthetic `size x size` input, after
/// one warm-up pass.
pub fn measure_timing(net: &Network<f32>, size: usize, modality: Modality, runs: usize, opts: &EvalOptions) -> Result<TimingReport> {
    let c = net.config().input_channels;
    let data: Vec<f32> = (0..c * size * size).map(|i| ((i % 97) as f32 / 97.0) - 0.5).collect();
    let x = pixgrasp_nn::Tensor::from_vec([1, c, size, size], data)?;
    net.infer(&x)?;
    let runs = runs.max(1);
    let (mut fwd, mut dec) = (0.0, 0.0);
    for _ in 0..runs {
        let t0 = Instant::now();
        let out = net.infer(&x)?;
        let t1 = Instant::now();
        let raw = NetworkOutput::from_batch(&out)?.remove(0);
        let maps = decode_maps(&raw, opts.width_scale, opts.smooth_sigma);
        let _ = extract_grasps(&maps, 5, 10);
        let t2 = Instant::now();
        fwd += (t1 - t0).as_secs_f64() * 1e3;
        dec += (t2 - t1).as_secs_f64() * 1e3;
    }
    let n = runs as f64;
    Ok(TimingReport {
        input_size: size,
        modality: modality.name().to_string(),
        runs,
        forward_ms: fwd / n,
        decode_ms: dec / n,
        end_to_end_ms: (fwd + dec) / n,
    })
}

/// Writes `report.json`, `samples.csv` and, when given, `timing.json` into `dir`.
pub fn write_reports(
    dir: &Path,
    report: &EvaluationReport,
    records: &[SampleRecord],
    timing: Option<&TimingReport>,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).at(dir)?;
    let mut written = Vec::new();
    let p = dir.join("report.json");
    File::create(&p).at(&p)?.write_all(serde_json::to_string_pretty(report)?.as_bytes()).at(&p)?;
    written.push(p);
    let p = dir.join("samples.csv");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(&p)?;
    w.write_record(["id", "correct", "iou_best", "angle_offset_deg", "ms"])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().at(&p)?;
    written.push(p);
    if let Some(t) = timing {
        let p = dir.join("timing.json");
        File::create(&p).at(&p)?.write_all(serde_json::to_string_pretty(t)?.as_bytes()).at(&p)?;
        written.push(p);
    }
    Ok(written)
}
