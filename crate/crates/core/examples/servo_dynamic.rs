//! Tracks a drifting block with and without the velocity feedforward term and
//! reports the steady-state lag of each.
//!
//! cargo run --release --example servo_dynamic -- [speed_m_per_s]

use pixgrasp::sim::{run_episode, OraclePredictor, Scene, SceneObject, SimConfig};

fn main() -> pixgrasp::Result<()> {
    let speed: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.02);
    let scene = Scene::with_objects(vec![
        SceneObject::block("block", [-0.04, 0.02], -0.3, [0.012, 0.035], 0.03).with_velocity([speed, 0.0], 0.0)
    ]);
    for feedforward in [true, false] {
        let cfg = SimConfig { feedforward, ..SimConfig::default() };
        let r = run_episode(&scene, &mut OraclePredictor { width_scale: cfg.width_scale }, &cfg)?;
        println!(
            "feedforward {feedforward:<5}: success {:<5} at {:>5.2} s, steady-state lag {:.2} mm",
            r.success,
            r.duration_s,
            r.steady_state_lag * 1e3
        );
    }
    Ok(())
}
