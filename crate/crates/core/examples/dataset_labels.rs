//! Renders a synthetic tabletop sample, rasterizes its grasp rectangles into
//! training targets and writes the target planes as heatmaps.
//!
//! cargo run --release --example dataset_labels -- [out_dir]

use pixgrasp::datasets::{augment, rasterize_labels, WIDTH_SCALE};
use pixgrasp::evaluation::{decode_grasp_maps, render_heatmaps};
use pixgrasp::sim::synthetic_dataset;

fn main() -> pixgrasp::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "dataset_labels_out".into());
    let sample = synthetic_dataset(1, 224, 3)?.remove(0);
    for r in &sample.rectangles {
        println!(
            "rectangle center ({:.1}, {:.1}) angle {:.1} deg width {:.1} height {:.1}",
            r.center[0],
            r.center[1],
            r.angle.to_degrees(),
            r.width,
            r.height
        );
    }
    for (name, s) in [("original", sample.clone()), ("augmented", augment(&sample, 17))] {
        let labels = rasterize_labels(&s.rectangles, s.height(), s.width(), WIDTH_SCALE)?;
        let painted = labels.quality.iter().filter(|&&q| q > 0.0).count();
        let decoded = decode_grasp_maps(&labels, WIDTH_SCALE, 0.0);
        let grasps: Vec<_> = s.rectangles.iter().map(|r| r.to_grasp(1.0)).collect();
        let files = render_heatmaps(&decoded, &grasps, &s.rgb, &std::path::Path::new(&out).join(name))?;
        println!("{name}: {painted} labelled pixels, overlay {}", files.overlay.display());
    }
    Ok(())
}
