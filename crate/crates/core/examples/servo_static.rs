//! Closed-loop grasp of a static block with the oracle predictor. Writes the
//! episode JSON, the per-tick CSV and an overlay every tenth tick.
//!
//! cargo run --release --example servo_static -- [out_dir]

use pixgrasp::sim::{run_episode, write_episode, write_episode_frames, OraclePredictor, Scene, SceneObject, SimConfig};

fn main() -> pixgrasp::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "servo_static_out".into());
    let scene = Scene::with_objects(vec![SceneObject::block("block", [0.05, -0.03], 0.4, [0.012, 0.035], 0.03)]);
    let cfg = SimConfig::default();
    let result = run_episode(&scene, &mut OraclePredictor { width_scale: cfg.width_scale }, &cfg)?;
    println!(
        "success {} after {:.2} s: position error {:.2} mm, angle error {:.3} deg",
        result.success,
        result.duration_s,
        result.final_position_error * 1e3,
        result.final_angle_error.to_degrees()
    );
    let dir = std::path::Path::new(&out);
    write_episode(dir, "static", &result, true)?;
    let frames = write_episode_frames(&scene, &cfg, &result, &dir.join("frames"), 10)?;
    println!("{} frames in {}", frames.len(), dir.display());
    Ok(())
}
