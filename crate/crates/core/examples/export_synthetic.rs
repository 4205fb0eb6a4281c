//! Writes rendered single-block scenes in both dataset layouts, then loads
//! them back through the regular loaders.
//!
//! cargo run --release --example export_synthetic -- [out_dir] [count]

use std::path::PathBuf;

use pixgrasp::datasets::{load_cornell, load_jacquard, write_cornell, write_jacquard};
use pixgrasp::sim::synthetic_dataset;

fn main() -> pixgrasp::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map_or("synthetic_datasets", String::as_str));
    let n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let samples = synthetic_dataset(n, 256, 42)?;
    write_cornell(&out.join("cornell"), &samples)?;
    write_jacquard(&out.join("jacquard"), &samples)?;
    let cornell = load_cornell(&out.join("cornell"), 224)?;
    let jacquard = load_jacquard(&out.join("jacquard"), 224)?;
    let rects = |v: &[pixgrasp::datasets::GraspSample]| v.iter().map(|s| s.rectangles.len()).sum::<usize>();
    println!("cornell layout: {} samples, {} rectangles", cornell.len(), rects(&cornell));
    println!("jacquard layout: {} samples, {} rectangles", jacquard.len(), rects(&jacquard));
    println!("written under {}", out.display());
    Ok(())
}
