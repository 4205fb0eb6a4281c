//! Memorizes eight synthetic samples written in a dataset's on-disk layout.
//!
//! cargo run --release --example overfit -- [cornell|jacquard] [size] [max_iterations] [learning_rate]

use pixgrasp::datasets::{write_cornell, write_jacquard, DatasetKind, Modality};
use pixgrasp::evaluation::{benchmark, EvalOptions};
use pixgrasp::network::NetworkConfig;
use pixgrasp::sim::synthetic_dataset;
use pixgrasp::training::{overfit_probe, ProbeConfig};

fn main() -> pixgrasp::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("debug")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: DatasetKind = args.first().map_or(Ok(DatasetKind::Cornell), |s| s.parse())?;
    let size: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(224);
    let max_iterations = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(500);
    let learning_rate = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(ProbeConfig::default().learning_rate);

    let root = std::env::temp_dir().join(format!("pixgrasp-overfit-{kind}-{size}"));
    let _ = std::fs::remove_dir_all(&root);
    let rendered = synthetic_dataset(8, size + 32, 11)?;
    match kind {
        DatasetKind::Cornell => write_cornell(&root, &rendered)?,
        DatasetKind::Jacquard => write_jacquard(&root, &rendered)?,
    }
    let samples = kind.load(&root, size)?;
    println!("loaded {} {kind} samples at {size}x{size}", samples.len());

    let cfg = ProbeConfig { max_iterations, learning_rate, ..ProbeConfig::default() };
    let (report, net) = overfit_probe(&samples, Modality::RgbD, &NetworkConfig::default(), &cfg)?;
    println!(
        "accuracy {:.3} after {} iterations ({:.1} s, final loss {:.5})",
        report.final_accuracy,
        report.iterations,
        report.seconds,
        report.losses.last().copied().unwrap_or(f64::NAN)
    );
    let (_, records) = benchmark(&net, &samples, kind.name(), Modality::RgbD, &EvalOptions::default())?;
    for r in &records {
        println!("{} correct {} iou {:.3} angle offset {:.1} deg", r.id, r.correct, r.iou_best, r.angle_offset_deg);
    }
    Ok(())
}
