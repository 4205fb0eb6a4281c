use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::control::{pbvs_velocity, select_tracked_grasp, Gains, GripperState, SpeedLimits, VelocityCommand, VelocityEstimator};
use super::predictor::{Observation, Predictor};
use super::scene::{render_depth, render_rgb, step_scene, Scene};
use crate::datasets::WIDTH_SCALE;
use crate::error::{Error, IoContext, Result};
use crate::evaluation::{decode_grasp_maps, depth_to_rgb, extract_grasps, overlay_image};
use crate::grasp::{angle_offset, grasp_image_to_world, GraspImage, GraspWorld};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub dt: f64,
    pub timeout_s: f64,
    pub image_size: usize,
    pub fx: f64,
    /// Grasp candidates extracted per frame.
    pub k: usize,
    pub min_distance: usize,
    pub smooth_sigma: f64,
    pub width_scale: f64,
    pub gains: Gains,
    pub max_speed: SpeedLimits,
    pub position_tolerance: f64,
    pub angle_tolerance_deg: f64,
    /// Planar distance below which the gripper starts descending.
    pub approach_radius: f64,
    pub opening_max: f64,
    /// Added to the predicted width when opening the fingers.
    pub opening_clearance: f64,
    pub start_position: [f64; 3],
    /// Adds the estimated target velocity to the proportional command.
    pub feedforward: bool,
    pub feedforward_window: usize,
    /// A tracked grasp jumping further than this (pixels) restarts velocity estimation.
    pub reset_distance_px: f64,
    /// Ticks at the end of an episode over which tracking lag is measured.
    pub lag_window: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            timeout_s: 15.0,
            image_size: 224,
            fx: 400.0,
            k: 5,
            min_distance: 10,
            smooth_sigma: 2.0,
            width_scale: WIDTH_SCALE,
            gains: Gains::default(),
            max_speed: SpeedLimits::default(),
            position_tolerance: 0.002,
            angle_tolerance_deg: 1.0,
            approach_radius: 0.02,
            opening_max: 0.08,
            opening_clearance: 0.01,
            start_position: [0.0, 0.0, 0.25],
            feedforward: true,
            feedforward_window: 25,
            reset_distance_px: 20.0,
            lag_window: 25,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.dt > 0.0) {
            return bad(format!("sim.dt must be positive, got {}", self.dt));
        }
        if !(self.gains.linear > 0.0 && self.gains.angular > 0.0) {
            return bad("sim.gains must be positive".into());
        }
        if !(self.max_speed.linear > 0.0 && self.max_speed.angular > 0.0) {
            return bad("sim.max_speed must be positive".into());
        }
        if self.image_size == 0 || !(self.fx > 0.0) {
            return bad("sim.image_size and sim.fx must be positive".into());
        }
        if self.k == 0 {
            return bad("sim.k must be at least 1".into());
        }
        Ok(())
    }

    pub fn ticks(&self) -> usize {
        (self.timeout_s / self.dt).round() as usize
    }
}

/// State after one control tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub t: f64,
    pub position: [f64; 3],
    pub yaw: f64,
    pub opening: f64,
    pub tracked: Option<GraspImage>,
    pub target: Option<GraspWorld>,
    pub object_id: Option<String>,
    pub command: VelocityCommand,
    /// Distance from the gripper to the true grasp point of the tracked (or
    /// nearest) object.
    pub position_error: f64,
    /// The same distance projected onto the table plane.
    pub planar_error: f64,
    pub angle_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub predictor: String,
    pub success: bool,
    pub timed_out: bool,
    pub steps: usize,
    pub duration_s: f64,
    pub final_position_error: f64,
    pub final_angle_error: f64,
    /// Largest planar gripper-to-object distance over the final ticks.
    pub steady_state_lag: f64,
    pub tracked_object: Option<String>,
    pub object_switches: usize,
    pub trajectory: Vec<TickRecord>,
}

fn depth_at(depth: &ndarray::Array2<f32>, g: &GraspImage) -> f64 {
    let (h, w) = depth.dim();
    let v = (g.v.round().max(0.0) as usize).min(h - 1);
    let u = (g.u.round().max(0.0) as usize).min(w - 1);
    depth[[v, u]] as f64
}

/// Closed-loop grasping episode: per tick render, predict, extract candidates,
/// track, lift to the world, servo, then advance the scene. Ends on success
/// or after `cfg.timeout_s` simulated seconds.
pub fn run_episode(scene: &Scene, predictor: &mut dyn Predictor, cfg: &SimConfig) -> Result<EpisodeResult> {
    cfg.validate()?;
    scene.validate()?;
    if scene.objects.is_empty() {
        return Err(Error::InvalidArgument("scene has no objects".into()));
    }
    let size = cfg.image_size;
    let cam = scene.camera(cfg.fx, size)?;
    let mut scene = scene.clone();
    let mut gripper = GripperState::at(cfg.start_position, cfg.opening_max, cfg.max_speed);
    let mut previous: Option<GraspImage> = None;
    let mut tracked_id: Option<String> = None;
    let mut switches = 0;
    let mut estimator = VelocityEstimator::new(cfg.feedforward_window);
    let angle_tol = cfg.angle_tolerance_deg.to_radians();
    let mut trajectory = Vec::new();
    let mut success = false;
    for _ in 0..cfg.ticks() {
        let t = scene.time;
        let depth = render_depth(&scene, &cam, size, size);
        let rgb = render_rgb(&scene, &cam, size, size);
        let maps = predictor.predict(&Observation { scene: &scene, cam: &cam, depth: &depth, rgb: &rgb })?;
        let decoded = decode_grasp_maps(&maps, cfg.width_scale, cfg.smooth_sigma);
        let candidates = extract_grasps(&decoded, cfg.k, cfg.min_distance);
        let mut cmd = VelocityCommand::default();
        let mut target = None;
        let mut tracked = None;
        match select_tracked_grasp(&candidates, previous.as_ref()) {
            Err(Error::NoGrasp) => {}
            Err(e) => return Err(e),
            Ok(g) => {
                if let Some(p) = &previous {
                    if (g.u - p.u).hypot(g.v - p.v) > cfg.reset_distance_px {
                        estimator.reset();
                    }
                }
                let world = grasp_image_to_world(&g, depth_at(&depth, &g), &cam)?;
                estimator.push(t, &world);
                let planar = (world.x - gripper.position[0]).hypot(world.y - gripper.position[1]);
                let mut goal = world;
                if planar >= cfg.approach_radius {
                    goal.z = gripper.position[2];
                }
                cmd = pbvs_velocity(&gripper, &goal, cfg.gains, cfg.max_speed);
                if cfg.feedforward {
                    if let Some([vx, vy, wz]) = estimator.estimate() {
                        cmd.linear[0] += vx;
                        cmd.linear[1] += vy;
                        cmd.angular[2] += wz;
                        cmd = cmd.clamped(cfg.max_speed);
                    }
                }
                gripper.set_opening(world.width + cfg.opening_clearance);
                let id = scene.nearest_object(world.x, world.y).map(|o| o.id.clone());
                if tracked_id.is_some() && id != tracked_id {
                    switches += 1;
                }
                tracked_id = id;
                previous = Some(g);
                tracked = Some(g);
                target = Some(world);
            }
        }
        gripper.integrate(&cmd, cfg.dt);
        scene = step_scene(&scene, cfg.dt);
        let object = match &tracked_id {
            Some(id) => scene.object(id),
            None => scene.nearest_object(gripper.position[0], gripper.position[1]),
        }
        .expect("scene has objects");
        let best = object.best_grasp();
        let d = [best.x - gripper.position[0], best.y - gripper.position[1], best.z - gripper.position[2]];
        let position_error = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let angle_error = angle_offset(gripper.yaw, best.angle)?;
        trajectory.push(TickRecord {
            t: scene.time,
            position: gripper.position,
            yaw: gripper.yaw,
            opening: gripper.finger_opening,
            tracked,
            target,
            object_id: tracked_id.clone(),
            command: cmd,
            position_error,
            planar_error: d[0].hypot(d[1]),
            angle_error,
        });
        let clears = gripper.finger_opening >= object.closing_extent() && gripper.finger_opening <= gripper.opening_max;
        if tracked_id.is_some() && position_error <= cfg.position_tolerance && angle_error <= angle_tol && clears {
            success = true;
            break;
        }
    }
    let last = trajectory.last().expect("at least one tick");
    let lag_from = trajectory.len().saturating_sub(cfg.lag_window.max(1));
    let steady_state_lag = trajectory[lag_from..].iter().map(|r| r.planar_error).fold(0.0, f64::max);
    Ok(EpisodeResult {
        predictor: predictor.name().to_string(),
        success,
        timed_out: !success,
        steps: trajectory.len(),
        duration_s: last.t,
        final_position_error: last.position_error,
        final_angle_error: last.angle_error,
        steady_state_lag,
        tracked_object: tracked_id,
        object_switches: switches,
        trajectory,
    })
}

/// Writes `<stem>.json` and, when asked, `<stem>_trajectory.csv` into `dir`.
pub fn write_episode(dir: &Path, stem: &str, result: &EpisodeResult, trajectory_csv: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).at(dir)?;
    let mut written = Vec::new();
    let p = dir.join(format!("{stem}.json"));
    File::create(&p).at(&p)?.write_all(serde_json::to_string_pretty(result)?.as_bytes()).at(&p)?;
    written.push(p);
    if trajectory_csv {
        let p = dir.join(format!("{stem}_trajectory.csv"));
        let mut w = csv::Writer::from_path(&p)?;
        w.write_record([
            "t", "x", "y", "z", "yaw", "opening", "object_id", "grasp_u", "grasp_v", "grasp_angle", "vx", "vy", "vz", "wz",
            "position_error", "planar_error", "angle_error",
        ])?;
        for r in &result.trajectory {
            let (gu, gv, ga) = r.tracked.map_or((String::new(), String::new(), String::new()), |g| {
                (g.u.to_string(), g.v.to_string(), g.angle.to_string())
            });
            w.write_record([
                r.t.to_string(),
                r.position[0].to_string(),
                r.position[1].to_string(),
                r.position[2].to_string(),
                r.yaw.to_string(),
                r.opening.to_string(),
                r.object_id.clone().unwrap_or_default(),
                gu,
                gv,
                ga,
                r.command.linear[0].to_string(),
                r.command.linear[1].to_string(),
                r.command.linear[2].to_string(),
                r.command.angular[2].to_string(),
                r.position_error.to_string(),
                r.planar_error.to_string(),
                r.angle_error.to_string(),
            ])?;
        }
        w.flush().at(&p)?;
        written.push(p);
    }
    Ok(written)
}

/// Re-simulates the scene and writes every `every`-th frame as a depth image
/// with the tracked grasp drawn on it.
pub fn write_episode_frames(scene: &Scene, cfg: &SimConfig, result: &EpisodeResult, dir: &Path, every: usize) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).at(dir)?;
    let size = cfg.image_size;
    let cam = scene.camera(cfg.fx, size)?;
    let mut scene = scene.clone();
    let mut written = Vec::new();
    for (i, r) in result.trajectory.iter().enumerate() {
        if i % every.max(1) == 0 {
            let depth = render_depth(&scene, &cam, size, size);
            let grasps: Vec<GraspImage> = r.tracked.into_iter().collect();
            let img = overlay_image(&depth_to_rgb(&depth), &grasps);
            let p = dir.join(format!("frame_{i:04}.png"));
            img.save(&p)?;
            written.push(p);
        }
        scene = step_scene(&scene, cfg.dt);
    }
    Ok(written)
}
