//! Command-line entry point: configuration resolution and subcommand dispatch.

mod commands;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::datasets::{DatasetKind, Modality};
use crate::error::{Error, IoContext, Result};
use crate::evaluation::EvalOptions;
use crate::network::NetworkConfig;
use crate::sim::SimConfig;
use crate::toml_file::from_toml;
use crate::training::TrainConfig;

pub use commands::{eval, predict, simulate, train, visualize, CommandOutput};

/// Environment variable consulted when no dataset root is configured.
pub const DATA_ROOT_ENV: &str = "GRASP_DATA_ROOT";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    #[default]
    Oracle,
    Model,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSubset {
    /// The validation side of the training split, reproduced from `[train]`.
    #[default]
    Validation,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub width_scale: f64,
    pub smooth_sigma: f64,
    pub iou_threshold: f64,
    pub angle_threshold_deg: f64,
    pub subset: EvalSubset,
    pub timing_runs: usize,
    /// Input side used for `timing.json`; defaults to the training input size.
    pub timing_size: Option<usize>,
    /// Grasps extracted per image by `predict` and `visualize`.
    pub top_k: usize,
    pub min_distance: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let o = EvalOptions::default();
        Self {
            width_scale: o.width_scale,
            smooth_sigma: o.smooth_sigma,
            iou_threshold: o.iou_threshold,
            angle_threshold_deg: o.angle_threshold_deg,
            subset: EvalSubset::Validation,
            timing_runs: 10,
            timing_size: None,
            top_k: 5,
            min_distance: 10,
        }
    }
}

impl EvalConfig {
    pub fn options(&self) -> EvalOptions {
        EvalOptions {
            width_scale: self.width_scale,
            smooth_sigma: self.smooth_sigma,
            iou_threshold: self.iou_threshold,
            angle_threshold_deg: self.angle_threshold_deg,
        }
    }
}

/// Paths and choices that select what a command runs on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset_root: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub scenes: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub depth: Option<PathBuf>,
    pub maps: Option<PathBuf>,
    pub predictor: PredictorKind,
    /// Parent of the timestamped run directories.
    pub runs_dir: PathBuf,
    /// Write an overlay PNG every this many simulator ticks; 0 disables.
    pub frame_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset_root: None,
            checkpoint: None,
            scenes: None,
            image: None,
            depth: None,
            maps: None,
            predictor: PredictorKind::Oracle,
            runs_dir: PathBuf::from("runs"),
            frame_every: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub run: RunConfig,
    pub train: TrainConfig,
    pub network: NetworkConfig,
    pub eval: EvalConfig,
    pub sim: SimConfig,
}

impl AppConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        from_toml(text, origin)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.network.validate()?;
        self.sim.validate()?;
        if self.network.input_channels != self.train.modality.channels() {
            return Err(Error::Config(format!(
                "network.input_channels is {} but modality {} has {} channels",
                self.network.input_channels,
                self.train.modality,
                self.train.modality.channels()
            )));
        }
        if !(self.eval.width_scale > 0.0 && self.train.width_scale > 0.0) {
            return Err(Error::Config("width_scale must be positive".into()));
        }
        Ok(())
    }
}

/// Command-line values that take precedence over the configuration file.
#[derive(Clone, Debug, Default, PartialEq, clap::Args)]
pub struct Flags {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dataset root (falls back to $GRASP_DATA_ROOT).
    #[arg(long, global = true)]
    pub dataset_root: Option<PathBuf>,
    /// cornell or jacquard.
    #[arg(long, global = true)]
    pub dataset: Option<DatasetKind>,
    /// d, rgb or rgbd.
    #[arg(long, global = true)]
    pub modality: Option<Modality>,
    #[arg(long, global = true)]
    pub input_size: Option<usize>,
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Output directory (default: runs/<timestamp>-<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub predictor: Option<PredictorKind>,
    /// Scene TOML file or directory of scene files.
    #[arg(long, global = true)]
    pub scenes: Option<PathBuf>,
    #[arg(long, global = true)]
    pub image: Option<PathBuf>,
    /// Depth TIFF in meters, paired with --image.
    #[arg(long, global = true)]
    pub depth: Option<PathBuf>,
    /// Maps archive written by `predict`.
    #[arg(long, global = true)]
    pub maps: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Train a network and write checkpoints and metrics.
    Train,
    /// Score a checkpoint with the rectangle metric and time inference.
    Eval,
    /// Run one image through a checkpoint and render its maps.
    Predict,
    /// Run closed-loop servoing episodes over a list of scenes.
    Simulate,
    /// Re-render maps saved by `predict`.
    Visualize,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Train => "train",
            Command::Eval => "eval",
            Command::Predict => "predict",
            Command::Simulate => "simulate",
            Command::Visualize => "visualize",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "pixgrasp", version, about = "Pixel-wise grasp detection and closed-loop servoing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Resolves defaults, then the file at `path`, then `flags`, then the
/// dataset-root environment fallback, and validates the result.
pub fn parse_config(path: Option<&Path>, flags: &Flags) -> Result<AppConfig> {
    let mut cfg = match path {
        Some(p) => {
            if !p.exists() {
                return Err(Error::FileNotFound(p.to_path_buf()));
            }
            AppConfig::from_toml_str(&std::fs::read_to_string(p).at(p)?, &p.display().to_string())?
        }
        None => AppConfig::default(),
    };
    let channels_from_file = cfg.network.input_channels;
    let run = &mut cfg.run;
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(run.dataset_root, flags.dataset_root.clone().map(Some));
    set!(run.checkpoint, flags.checkpoint.clone().map(Some));
    set!(run.scenes, flags.scenes.clone().map(Some));
    set!(run.image, flags.image.clone().map(Some));
    set!(run.depth, flags.depth.clone().map(Some));
    set!(run.maps, flags.maps.clone().map(Some));
    set!(run.predictor, flags.predictor);
    set!(cfg.train.dataset, flags.dataset);
    set!(cfg.train.modality, flags.modality);
    set!(cfg.train.input_size, flags.input_size);
    set!(cfg.train.seed, flags.seed);
    set!(cfg.train.epochs, flags.epochs.map(Some));
    if cfg.run.dataset_root.is_none() {
        cfg.run.dataset_root = std::env::var_os(DATA_ROOT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    }
    // Input channels follow the modality unless the file pinned them.
    if channels_from_file == NetworkConfig::default().input_channels || flags.modality.is_some() {
        cfg.network.input_channels = cfg.train.modality.channels();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `<runs_dir>/<UTC timestamp>-<command>`, or `out` when given.
pub fn run_directory(cfg: &AppConfig, command: Command, out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => {
            let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
            cfg.run.runs_dir.join(format!("{stamp}-{}", command.name()))
        }
    }
}

/// Creates `dir` and writes the resolved configuration into it.
pub fn write_resolved_config(cfg: &AppConfig, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).at(dir)?;
    let path = dir.join("config.toml");
    std::fs::write(&path, cfg.to_toml_string()?).at(&path)?;
    Ok(path)
}

/// Checks that the inputs a command needs are configured and present, before
/// anything is written.
pub fn preflight(command: Command, cfg: &AppConfig) -> Result<()> {
    let need = |value: &Option<PathBuf>, flag: &'static str| -> Result<()> {
        let p = value.as_deref().ok_or(Error::MissingFlag(flag))?;
        if p.exists() {
            Ok(())
        } else {
            Err(Error::FileNotFound(p.to_path_buf()))
        }
    };
    let r = &cfg.run;
    match command {
        Command::Train => need(&r.dataset_root, "--dataset-root"),
        Command::Eval => need(&r.checkpoint, "--checkpoint").and(need(&r.dataset_root, "--dataset-root")),
        Command::Predict => need(&r.checkpoint, "--checkpoint").and(need(&r.image, "--image")),
        Command::Simulate => {
            need(&r.scenes, "--scenes")?;
            match r.predictor {
                PredictorKind::Model => need(&r.checkpoint, "--checkpoint"),
                PredictorKind::Oracle => Ok(()),
            }
        }
        Command::Visualize => need(&r.maps, "--maps"),
    }
}

/// Runs one command against a resolved configuration, writing into `dir`.
pub fn dispatch(command: Command, cfg: &AppConfig, dir: &Path) -> Result<CommandOutput> {
    preflight(command, cfg)?;
    write_resolved_config(cfg, dir)?;
    match command {
        Command::Train => train(cfg, dir),
        Command::Eval => eval(cfg, dir),
        Command::Predict => predict(cfg, dir),
        Command::Simulate => simulate(cfg, dir),
        Command::Visualize => visualize(cfg, dir),
    }
}

/// Parses `args`, runs the command and reports errors on stderr. Exit status
/// is zero only when the command completed.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
        }
    };
    let result = parse_config(cli.flags.config.as_deref(), &cli.flags).and_then(|cfg| {
        let dir = run_directory(&cfg, cli.command, cli.flags.out.as_deref());
        dispatch(cli.command, &cfg, &dir)
    });
    match result {
        Ok(out) => {
            println!("{}", out.summary);
            println!("outputs in {}", out.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = AppConfig::from_toml_str("", "test").unwrap();
        assert_eq!(cfg, AppConfig::default());
        assert_eq!(cfg.train.batch_size, 8);
        assert_eq!(cfg.train.beta, 1.0);
        assert_eq!(cfg.network.spp_kernels, vec![5, 9, 13]);
    }

    #[test]
    fn unknown_key_names_its_path() {
        let err = AppConfig::from_toml_str("[train]\nbatch_sz = 4\n", "test").unwrap_err();
        assert!(err.to_string().contains("unknown key: train.batch_sz"), "{err}");
    }

    #[test]
    fn type_mismatch_names_the_expected_type() {
        let err = AppConfig::from_toml_str("[train]\ninput_size = \"big\"\n", "test").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("train.input_size") && msg.contains("expected usize"), "{msg}");
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = AppConfig::default();
        cfg.train.epochs = Some(3);
        cfg.run.checkpoint = Some("a/best.ckpt".into());
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(AppConfig::from_toml_str(&text, "echo").unwrap(), cfg);
    }
}
