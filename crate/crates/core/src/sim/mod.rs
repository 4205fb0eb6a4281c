//! Top-down grasping simulator: block scenes, a fixed overhead camera,
//! predictors, hysteresis tracking and a position-based velocity controller.

mod control;
mod episode;
mod predictor;
mod scene;
mod synthetic;

pub use control::{pbvs_velocity, select_tracked_grasp, Gains, GripperState, SpeedLimits, VelocityCommand, VelocityEstimator};
pub use episode::{run_episode, write_episode, write_episode_frames, EpisodeResult, SimConfig, TickRecord};
pub use predictor::{oracle_predict, EmptyPredictor, ModelPredictor, Observation, OraclePredictor, Predictor};
pub use scene::{render_depth, render_rgb, step_scene, Scene, SceneObject, Workspace};
pub use synthetic::{random_scene, synthetic_dataset, synthetic_sample};
