use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use pixgrasp_nn::{Adam, Module, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::{batch_loss, batch_targets, LossBreakdown};
use crate::datasets::{augment, normalize_inputs, rasterize_labels, split, DatasetKind, GraspSample, Modality, SplitMode, WIDTH_SCALE};
use crate::error::{Error, IoContext, Result};
use crate::evaluation::{benchmark, EvalOptions};
use crate::network::{batch_inputs, save_checkpoint, Mode, Network, NetworkConfig};

pub const METRICS_HEADER: &str = "epoch,loss_total,loss_q,loss_sin,loss_cos,loss_w,val_accuracy,seconds";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub dataset: DatasetKind,
    pub modality: Modality,
    pub input_size: usize,
    pub batch_size: usize,
    /// Defaults to 100 for Cornell and 20 for Jacquard.
    pub epochs: Option<usize>,
    pub learning_rate: f64,
    pub beta: f64,
    pub seed: u64,
    pub split_mode: SplitMode,
    pub train_fraction: f64,
    pub augment: bool,
    pub width_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetKind::Cornell,
            modality: Modality::RgbD,
            input_size: 224,
            batch_size: 8,
            epochs: None,
            learning_rate: 1e-3,
            beta: 1.0,
            seed: 0,
            split_mode: SplitMode::ObjectWise,
            train_fraction: 0.9,
            augment: true,
            width_scale: WIDTH_SCALE,
        }
    }
}

impl TrainConfig {
    pub fn epochs(&self) -> usize {
        self.epochs.unwrap_or(match self.dataset {
            DatasetKind::Cornell => 100,
            DatasetKind::Jacquard => 20,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return bad("train.batch_size must be at least 1".into());
        }
        if !(self.beta > 0.0) {
            return bad(format!("train.beta must be positive, got {}", self.beta));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("train.learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train.train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        if self.input_size == 0 {
            return bad("train.input_size must be positive".into());
        }
        Ok(())
    }
}

/// Network inputs and label targets for a batch of samples.
pub fn prepare_batch(samples: &[&GraspSample], modality: Modality, width_scale: f64) -> Result<(Tensor<f32>, Tensor<f32>)> {
    let inputs = samples.iter().map(|s| normalize_inputs(s, modality)).collect::<Result<Vec<_>>>()?;
    let labels = samples
        .iter()
        .map(|s| rasterize_labels(&s.rectangles, s.height(), s.width(), width_scale))
        .collect::<Result<Vec<_>>>()?;
    let x = batch_inputs(&inputs.iter().collect::<Vec<_>>())?;
    let y = batch_targets(&labels.iter().collect::<Vec<_>>())?;
    Ok((x, y))
}

/// Owns the network and optimizer state for single-threaded training.
pub struct Trainer {
    pub net: Network<f32>,
    pub optimizer: Adam,
    pub beta: f64,
}

impl Trainer {
    pub fn new(net: Network<f32>, learning_rate: f64, beta: f64) -> Self {
        Self { net, optimizer: Adam::new(learning_rate), beta }
    }

    /// Forward, loss, backward and one Adam update. A non-finite loss aborts
    /// before the weights are touched.
    pub fn train_step(&mut self, x: &Tensor<f32>, y: &Tensor<f32>, batch_id: &str) -> Result<LossBreakdown> {
        self.net.zero_grad();
        let out = self.net.forward(x, Mode::Train)?;
        let (loss, grad) = batch_loss(&out, y, self.beta)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { batch: batch_id.to_string(), detail: format!("{loss:?}") });
        }
        self.net.backward(&grad)?;
        self.optimizer.step(&mut self.net);
        Ok(loss)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss_total: f64,
    pub loss_q: f64,
    pub loss_sin: f64,
    pub loss_cos: f64,
    pub loss_w: f64,
    pub val_accuracy: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainSummary {
    pub epochs: Vec<EpochMetrics>,
    pub best_epoch: usize,
    pub best_accuracy: f64,
    pub best_checkpoint: PathBuf,
    pub n_train: usize,
    pub n_val: usize,
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn append_metrics(path: &Path, m: &EpochMetrics) -> Result<()> {
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(path).at(path)?;
    if fresh {
        writeln!(f, "{METRICS_HEADER}").at(path)?;
    }
    writeln!(
        f,
        "{},{},{},{},{},{},{},{:.3}",
        m.epoch, m.loss_total, m.loss_q, m.loss_sin, m.loss_cos, m.loss_w, m.val_accuracy, m.seconds
    )
    .at(path)
}

/// Trains from scratch on `samples`, validating after every epoch.
///
/// Writes `metrics.csv`, `epoch_<n>.ckpt` (1-based) and `best.ckpt` into
/// `out_dir`. Shuffling and augmentation are seeded from `cfg.seed`.
pub fn train(cfg: &TrainConfig, net_cfg: &NetworkConfig, samples: Vec<GraspSample>, out_dir: &Path) -> Result<TrainSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let (train_set, val_set) = split(samples, cfg.split_mode, cfg.train_fraction, cfg.seed)?;
    if train_set.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    let net = Network::new(net_cfg.clone().with_input_channels(cfg.modality.channels()), cfg.seed)?;
    let mut trainer = Trainer::new(net, cfg.learning_rate, cfg.beta);
    let eval_opts = EvalOptions { width_scale: cfg.width_scale, ..EvalOptions::default() };
    let metrics_path = out_dir.join("metrics.csv");
    let best_path = out_dir.join("best.ckpt");
    let mut history = Vec::new();
    let (mut best_epoch, mut best_accuracy) = (0, f64::NEG_INFINITY);
    log::info!("training on {} samples, validating on {}", train_set.len(), val_set.len());
    for epoch in 1..=cfg.epochs() {
        let start = Instant::now();
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(cfg.seed, epoch as u64, 0)));
        let mut sums = [0.0; 4];
        let mut batches = 0usize;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<GraspSample> = chunk
                .iter()
                .map(|&i| {
                    if cfg.augment {
                        augment(&train_set[i], mix(cfg.seed, epoch as u64, i as u64 + 1))
                    } else {
                        train_set[i].clone()
                    }
                })
                .collect();
            let refs: Vec<&GraspSample> = batch.iter().collect();
            let (x, y) = prepare_batch(&refs, cfg.modality, cfg.width_scale)?;
            let ids: Vec<&str> = batch.iter().map(|s| s.id.as_str()).collect();
            let batch_id = format!("epoch {epoch} batch {bi} [{}]", ids.join(", "));
            let loss = trainer.train_step(&x, &y, &batch_id)?;
            for (s, t) in sums.iter_mut().zip(loss.terms()) {
                *s += t;
            }
            batches += 1;
        }
        let mean = LossBreakdown::from_terms(sums.map(|s| s / batches as f64));
        let val_accuracy = if val_set.is_empty() {
            f64::NAN
        } else {
            benchmark(&trainer.net, &val_set, cfg.dataset.name(), cfg.modality, &eval_opts)?.0.accuracy
        };
        let m = EpochMetrics {
            epoch,
            loss_total: mean.total,
            loss_q: mean.quality_term,
            loss_sin: mean.angle_sin_term,
            loss_cos: mean.angle_cos_term,
            loss_w: mean.width_term,
            val_accuracy,
            seconds: start.elapsed().as_secs_f64(),
        };
        append_metrics(&metrics_path, &m)?;
        save_checkpoint(&trainer.net, &out_dir.join(format!("epoch_{epoch}.ckpt")))?;
        let score = if val_accuracy.is_nan() { -mean.total } else { val_accuracy };
        if score > best_accuracy {
            best_accuracy = score;
            best_epoch = epoch;
            save_checkpoint(&trainer.net, &best_path)?;
        }
        log::info!("epoch {epoch}: loss {:.5}, val accuracy {:.4}", m.loss_total, m.val_accuracy);
        history.push(m);
    }
    Ok(TrainSummary {
        best_accuracy: history.get(best_epoch.wrapping_sub(1)).map_or(f64::NAN, |m| m.val_accuracy),
        epochs: history,
        best_epoch,
        best_checkpoint: best_path,
        n_train: train_set.len(),
        n_val: val_set.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub max_iterations: usize,
    pub learning_rate: f64,
    pub beta: f64,
    pub seed: u64,
    /// Accuracy is measured every this many iterations; the probe stops at 100%.
    pub eval_every: usize,
    pub width_scale: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { max_iterations: 500, learning_rate: 1e-2, beta: 1.0, seed: 0, eval_every: 10, width_scale: WIDTH_SCALE }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub iterations: usize,
    pub losses: Vec<f64>,
    /// `(iteration, accuracy)` at every evaluation.
    pub accuracy_history: Vec<(usize, f64)>,
    pub final_accuracy: f64,
    pub solved: bool,
    pub seconds: f64,
}

/// Memorization check: trains on one fixed batch without augmentation and
/// scores the same samples with the rectangle metric.
pub fn overfit_probe(
    samples: &[GraspSample],
    modality: Modality,
    net_cfg: &NetworkConfig,
    cfg: &ProbeConfig,
) -> Result<(ProbeReport, Network<f32>)> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("overfit probe needs at least one sample".into()));
    }
    let start = Instant::now();
    let net = Network::new(net_cfg.clone().with_input_channels(modality.channels()), cfg.seed)?;
    let mut trainer = Trainer::new(net, cfg.learning_rate, cfg.beta);
    let refs: Vec<&GraspSample> = samples.iter().collect();
    let (x, y) = prepare_batch(&refs, modality, cfg.width_scale)?;
    let opts = EvalOptions { width_scale: cfg.width_scale, ..EvalOptions::default() };
    let mut losses = Vec::new();
    let mut history = Vec::new();
    let mut accuracy = 0.0;
    let every = cfg.eval_every.max(1);
    for it in 1..=cfg.max_iterations {
        let loss = trainer.train_step(&x, &y, &format!("probe iteration {it}"))?;
        losses.push(loss.total);
        if it % every == 0 || it == cfg.max_iterations {
            accuracy = benchmark(&trainer.net, samples, "probe", modality, &opts)?.0.accuracy;
            history.push((it, accuracy));
            log::debug!("probe iteration {it}: loss {:.5}, accuracy {accuracy:.3}", loss.total);
            if accuracy >= 1.0 {
                break;
            }
        }
    }
    let report = ProbeReport {
        iterations: losses.len(),
        losses,
        accuracy_history: history,
        final_accuracy: accuracy,
        solved: accuracy >= 1.0,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok((report, trainer.net))
}
