//! Scores a checkpoint (or an untrained network) on synthetic samples with the
//! rectangle metric and writes report.json, samples.csv and a 480x480 timing.json.
//!
//! cargo run --release --example evaluate -- [checkpoint] [out_dir]

use pixgrasp::datasets::Modality;
use pixgrasp::evaluation::{benchmark, measure_timing, write_reports, EvalOptions};
use pixgrasp::network::{build_network, load_checkpoint, NetworkConfig};
use pixgrasp::sim::synthetic_dataset;

fn main() -> pixgrasp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let net = match args.first() {
        Some(p) => load_checkpoint(p.as_ref())?,
        None => build_network(NetworkConfig::default(), 0)?,
    };
    let out = args.get(1).map_or("evaluate_out", String::as_str);
    let samples = synthetic_dataset(16, 224, 500)?;
    let opts = EvalOptions::default();
    let (report, records) = benchmark(&net, &samples, "synthetic", Modality::RgbD, &opts)?;
    let timing = measure_timing(&net, 480, Modality::RgbD, 5, &opts)?;
    write_reports(out.as_ref(), &report, &records, Some(&timing))?;
    println!("accuracy {:.3} ({}/{})", report.accuracy, report.n_correct, report.n_samples);
    println!(
        "480x480 rgbd: forward {:.1} ms, decode {:.1} ms, end-to-end {:.1} ms",
        timing.forward_ms, timing.decode_ms, timing.end_to_end_ms
    );
    Ok(())
}
