//! Tracked-grasp selection: the first pick is the best candidate, later picks
//! stay with the candidate nearest the previous one. Then a full episode with
//! two identical blocks, counting switches of the tracked object.
//!
//! cargo run --release --example tracking_hysteresis

use pixgrasp::grasp::GraspImage;
use pixgrasp::sim::{run_episode, select_tracked_grasp, OraclePredictor, Scene, SceneObject, SimConfig};

fn grasp(u: f64, v: f64, quality: f64) -> GraspImage {
    GraspImage { u, v, angle: 0.0, width: 20.0, quality }
}

fn main() -> pixgrasp::Result<()> {
    let candidates = [grasp(10.0, 10.0, 0.9), grasp(50.0, 50.0, 0.95)];
    let first = select_tracked_grasp(&candidates, None)?;
    println!("no history: picks ({}, {}) with quality {}", first.u, first.v, first.quality);
    let next = select_tracked_grasp(&candidates, Some(&grasp(12.0, 11.0, 0.8)))?;
    println!("previous at (12, 11): stays with ({}, {})", next.u, next.v);

    let scene = Scene::with_objects(vec![
        SceneObject::block("left", [-0.05, 0.0], 0.0, [0.012, 0.035], 0.03),
        SceneObject::block("right", [0.05, 0.0], 0.0, [0.012, 0.035], 0.03),
    ]);
    let cfg = SimConfig::default();
    let r = run_episode(&scene, &mut OraclePredictor { width_scale: cfg.width_scale }, &cfg)?;
    println!(
        "two blocks: tracked {:?}, {} switches, success {} after {:.2} s",
        r.tracked_object, r.object_switches, r.success, r.duration_s
    );
    Ok(())
}
