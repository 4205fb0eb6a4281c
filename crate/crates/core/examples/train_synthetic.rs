//! A short training run of a reduced network on rendered scenes written in the
//! Cornell layout, with checkpoints and metrics.csv in the output directory.
//!
//! cargo run --release --example train_synthetic -- [out_dir] [epochs]

use std::path::PathBuf;

use pixgrasp::datasets::{load_cornell, write_cornell, Modality, SplitMode};
use pixgrasp::network::NetworkConfig;
use pixgrasp::sim::synthetic_dataset;
use pixgrasp::training::{train, TrainConfig};

fn main() -> pixgrasp::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map_or("train_synthetic_out", String::as_str));
    let epochs = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let root = out.join("data");
    write_cornell(&root, &synthetic_dataset(40, 128, 1)?)?;
    let samples = load_cornell(&root, 96)?;
    let cfg = TrainConfig {
        modality: Modality::RgbD,
        input_size: 96,
        epochs: Some(epochs),
        split_mode: SplitMode::ObjectWise,
        ..TrainConfig::default()
    };
    let net = NetworkConfig { stem_channels: 16, channel_schedule: vec![16, 32, 64], ..NetworkConfig::default() };
    let summary = train(&cfg, &net, samples, &out.join("run"))?;
    for m in &summary.epochs {
        println!("epoch {}: loss {:.4}, validation accuracy {:.3}", m.epoch, m.loss_total, m.val_accuracy);
    }
    println!("best checkpoint {}", summary.best_checkpoint.display());
    Ok(())
}
