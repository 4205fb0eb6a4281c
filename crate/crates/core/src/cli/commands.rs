use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use serde::Serialize;

use super::{AppConfig, EvalSubset, PredictorKind};
use crate::datasets::{normalize_inputs, read_depth_tiff, read_rgb, split, GraspSample, Modality};
use crate::error::{Error, IoContext, Result};
use crate::evaluation::{
    benchmark, decode_maps, depth_to_rgb, extract_grasps, measure_timing, render_heatmaps, write_reports, DecodedMaps,
    NetworkOutput,
};
use crate::grasp::GraspImage;
use crate::network::{batch_inputs, load_checkpoint, read_arrays, write_arrays, NamedArrays, Network};
use crate::sim::{run_episode, write_episode, write_episode_frames, ModelPredictor, OraclePredictor, Predictor, Scene};

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    /// One-line human-readable result.
    pub summary: String,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    File::create(path).at(path)?.write_all(serde_json::to_string_pretty(value)?.as_bytes()).at(path)?;
    Ok(path.to_path_buf())
}

fn dataset_root(cfg: &AppConfig) -> Result<&Path> {
    cfg.run.dataset_root.as_deref().ok_or(Error::MissingFlag("--dataset-root"))
}

fn checkpoint(cfg: &AppConfig) -> Result<Network<f32>> {
    let path = cfg.run.checkpoint.as_deref().ok_or(Error::MissingFlag("--checkpoint"))?;
    load_checkpoint(path)
}

pub fn train(cfg: &AppConfig, dir: &Path) -> Result<CommandOutput> {
    let root = dataset_root(cfg)?;
    let samples = cfg.train.dataset.load(root, cfg.train.input_size)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument(format!("no samples found under {}", root.display())));
    }
    let summary = crate::training::train(&cfg.train, &cfg.network, samples, dir)?;
    let files = vec![write_json(&dir.join("summary.json"), &summary)?, summary.best_checkpoint.clone()];
    Ok(CommandOutput {
        dir: dir.to_path_buf(),
        files,
        summary: format!(
            "trained {} epochs on {} samples; best validation accuracy {:.4} at epoch {}",
            summary.epochs.len(),
            summary.n_train,
            summary.best_accuracy,
            summary.best_epoch
        ),
    })
}

pub fn eval(cfg: &AppConfig, dir: &Path) -> Result<CommandOutput> {
    let net = checkpoint(cfg)?;
    let root = dataset_root(cfg)?;
    let samples = cfg.train.dataset.load(root, cfg.train.input_size)?;
    let samples = match cfg.eval.subset {
        EvalSubset::All => samples,
        EvalSubset::Validation => split(samples, cfg.train.split_mode, cfg.train.train_fraction, cfg.train.seed)?.1,
    };
    let opts = cfg.eval.options();
    let (report, records) = benchmark(&net, &samples, cfg.train.dataset.name(), cfg.train.modality, &opts)?;
    let size = cfg.eval.timing_size.unwrap_or(cfg.train.input_size);
    let timing = measure_timing(&net, size, cfg.train.modality, cfg.eval.timing_runs, &opts)?;
    let files = write_reports(dir, &report, &records, Some(&timing))?;
    Ok(CommandOutput {
        dir: dir.to_path_buf(),
        files,
        summary: format!(
            "accuracy {:.4} ({}/{}); forward {:.1} ms, end-to-end {:.1} ms at {size}x{size}",
            report.accuracy, report.n_correct, report.n_samples, timing.forward_ms, timing.end_to_end_ms
        ),
    })
}

fn load_input(cfg: &AppConfig) -> Result<GraspSample> {
    let modality = cfg.train.modality;
    let image = cfg.run.image.as_deref().ok_or(Error::MissingFlag("--image"))?;
    let rgb = read_rgb(image)?;
    let (h, w, _) = rgb.dim();
    let depth = match cfg.run.depth.as_deref() {
        Some(p) => read_depth_tiff(p)?,
        None if modality == Modality::Rgb => Array2::ones((h, w)),
        None => return Err(Error::MissingFlag("--depth")),
    };
    if depth.dim() != (h, w) {
        return Err(Error::Shape(format!("depth {:?} vs image {:?}", depth.dim(), (h, w))));
    }
    let id = image.file_stem().map_or_else(|| "input".into(), |s| s.to_string_lossy().into_owned());
    let sample = GraspSample { id, rgb, depth, rectangles: Vec::new(), object_id: None };
    let size = cfg.train.input_size;
    if h < size || w < size {
        return Err(Error::Shape(format!("{w}x{h} image is smaller than the {size}px input size")));
    }
    sample.center_crop(size)
}

fn save_maps(path: &Path, maps: &DecodedMaps, rgb: &Array3<u8>, grasps: &[GraspImage]) -> Result<PathBuf> {
    let (h, w) = maps.dim();
    let mut arrays = NamedArrays::new();
    for (name, plane) in [("quality", &maps.quality), ("angle", &maps.angle), ("width", &maps.width)] {
        arrays.insert(name.into(), (vec![h, w], plane.iter().copied().collect()));
    }
    arrays.insert("rgb".into(), (vec![h, w, 3], rgb.iter().map(|&v| v as f32).collect()));
    let meta = HashMap::from([("grasps".to_string(), serde_json::to_string(grasps)?)]);
    write_arrays(path, &arrays, meta)?;
    Ok(path.to_path_buf())
}

pub fn predict(cfg: &AppConfig, dir: &Path) -> Result<CommandOutput> {
    let net = checkpoint(cfg)?;
    let sample = load_input(cfg)?;
    let modality = cfg.train.modality;
    if net.config().input_channels != modality.channels() {
        return Err(Error::Config(format!(
            "checkpoint takes {} input channels but modality {modality} has {}",
            net.config().input_channels,
            modality.channels()
        )));
    }
    let out = net.infer(&batch_inputs(&[&normalize_inputs(&sample, modality)?])?)?;
    let raw = NetworkOutput::from_batch(&out)?.remove(0);
    let maps = decode_maps(&raw, cfg.eval.width_scale, cfg.eval.smooth_sigma);
    let grasps = extract_grasps(&maps, cfg.eval.top_k, cfg.eval.min_distance);
    let rendered = render_heatmaps(&maps, &grasps, &sample.rgb, dir)?;
    let mut files: Vec<PathBuf> = rendered.all().into_iter().cloned().collect();
    files.push(write_json(&dir.join("grasps.json"), &grasps)?);
    files.push(save_maps(&dir.join("maps.safetensors"), &maps, &sample.rgb, &grasps)?);
    let summary = match grasps.first() {
        Some(g) => format!(
            "{} grasps; best at ({:.1}, {:.1}) angle {:.1} deg width {:.1} px quality {:.3}",
            grasps.len(),
            g.u,
            g.v,
            g.angle.to_degrees(),
            g.width,
            g.quality
        ),
        None => "no grasp candidates".into(),
    };
    Ok(CommandOutput { dir: dir.to_path_buf(), files, summary })
}

/// Scene files under `path`: the file itself, or every `*.toml` in the directory.
pub fn scene_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)
        .at(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::InvalidArgument(format!("no scene files in {}", path.display())));
    }
    Ok(files)
}

#[derive(Serialize)]
struct EpisodeLine {
    scene: String,
    success: bool,
    duration_s: f64,
    final_position_error: f64,
    final_angle_error: f64,
    steady_state_lag: f64,
    object_switches: usize,
}

pub fn simulate(cfg: &AppConfig, dir: &Path) -> Result<CommandOutput> {
    let scenes = cfg.run.scenes.as_deref().ok_or(Error::MissingFlag("--scenes"))?;
    let files = scene_files(scenes)?;
    let mut predictor: Box<dyn Predictor> = match cfg.run.predictor {
        PredictorKind::Oracle => Box::new(OraclePredictor { width_scale: cfg.sim.width_scale }),
        PredictorKind::Model => Box::new(ModelPredictor::new(checkpoint(cfg)?, cfg.train.modality)?),
    };
    let mut written = Vec::new();
    let mut lines = Vec::new();
    for path in &files {
        let scene = Scene::load(path)?;
        let stem = path.file_stem().map_or_else(|| "scene".into(), |s| s.to_string_lossy().into_owned());
        let result = run_episode(&scene, predictor.as_mut(), &cfg.sim)?;
        written.extend(write_episode(dir, &stem, &result, true)?);
        if cfg.run.frame_every > 0 {
            written.extend(write_episode_frames(&scene, &cfg.sim, &result, &dir.join(&stem), cfg.run.frame_every)?);
        }
        log::info!("{stem}: success {} after {:.2} s", result.success, result.duration_s);
        lines.push(EpisodeLine {
            scene: stem,
            success: result.success,
            duration_s: result.duration_s,
            final_position_error: result.final_position_error,
            final_angle_error: result.final_angle_error,
            steady_state_lag: result.steady_state_lag,
            object_switches: result.object_switches,
        });
    }
    written.push(write_json(&dir.join("summary.json"), &lines)?);
    let ok = lines.iter().filter(|l| l.success).count();
    Ok(CommandOutput {
        dir: dir.to_path_buf(),
        files: written,
        summary: format!("{ok}/{} episodes succeeded with the {} predictor", lines.len(), predictor.name()),
    })
}

fn take_plane(arrays: &mut NamedArrays, name: &str) -> Result<Array2<f32>> {
    let (shape, data) = arrays.remove(name).ok_or_else(|| Error::Parse(format!("maps archive has no `{name}` array")))?;
    match shape[..] {
        [h, w] => Array2::from_shape_vec((h, w), data).map_err(|e| Error::Shape(e.to_string())),
        _ => Err(Error::Shape(format!("`{name}` has shape {shape:?}, expected two axes"))),
    }
}

/// Reads maps written by `predict`, with the input image when stored.
pub fn load_maps(path: &Path) -> Result<(DecodedMaps, Option<Array3<u8>>)> {
    let (mut arrays, _) = read_arrays(path)?;
    let maps = DecodedMaps {
        quality: take_plane(&mut arrays, "quality")?,
        angle: take_plane(&mut arrays, "angle")?,
        width: take_plane(&mut arrays, "width")?,
    };
    let rgb = match arrays.remove("rgb") {
        Some((shape, data)) if shape.len() == 3 && shape[2] == 3 => Some(
            Array3::from_shape_vec((shape[0], shape[1], 3), data.iter().map(|&v| v.clamp(0.0, 255.0) as u8).collect())
                .map_err(|e| Error::Shape(e.to_string()))?,
        ),
        _ => None,
    };
    Ok((maps, rgb))
}

pub fn visualize(cfg: &AppConfig, dir: &Path) -> Result<CommandOutput> {
    let path = cfg.run.maps.as_deref().ok_or(Error::MissingFlag("--maps"))?;
    let (maps, stored) = load_maps(path)?;
    let background = match (cfg.run.image.as_deref(), stored) {
        (Some(p), _) => read_rgb(p)?,
        (None, Some(rgb)) => rgb,
        (None, None) => depth_to_rgb(&maps.quality.mapv(|q| 1.0 - q)),
    };
    let grasps = extract_grasps(&maps, cfg.eval.top_k, cfg.eval.min_distance);
    let rendered = render_heatmaps(&maps, &grasps, &background, dir)?;
    let ranges: BTreeMap<&str, [f32; 2]> = [("quality", &maps.quality), ("angle", &maps.angle), ("width", &maps.width)]
        .into_iter()
        .map(|(k, p)| (k, [p.fold(f32::INFINITY, |a, &b| a.min(b)), p.fold(f32::NEG_INFINITY, |a, &b| a.max(b))]))
        .collect();
    Ok(CommandOutput {
        dir: dir.to_path_buf(),
        files: rendered.all().into_iter().cloned().collect(),
        summary: format!("rendered {} grasps; plane ranges {ranges:?}", grasps.len()),
    })
}
