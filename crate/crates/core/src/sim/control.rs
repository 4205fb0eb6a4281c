use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grasp::{angle_error, wrap, GraspImage, GraspWorld};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedLimits {
    /// m/s, applied to the norm of the linear command.
    pub linear: f64,
    /// rad/s, applied to each angular component.
    pub angular: f64,
}

impl Default for SpeedLimits {
    fn default() -> Self {
        Self { linear: 0.25, angular: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gains {
    pub linear: f64,
    pub angular: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self { linear: 2.0, angular: 2.0 }
    }
}

/// End-effector pose (position in meters, yaw-pitch-roll in radians) and
/// finger opening.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GripperState {
    pub position: [f64; 3],
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub finger_opening: f64,
    pub opening_max: f64,
    pub max_speed: SpeedLimits,
}

impl GripperState {
    pub fn at(position: [f64; 3], opening_max: f64, max_speed: SpeedLimits) -> Self {
        Self { position, yaw: 0.0, pitch: 0.0, roll: 0.0, finger_opening: opening_max, opening_max, max_speed }
    }

    /// Applies `cmd` for `dt` seconds. Yaw is kept in `[-pi/2, pi/2)` since the
    /// two-finger gripper is symmetric under a half turn.
    pub fn integrate(&mut self, cmd: &VelocityCommand, dt: f64) {
        for (p, v) in self.position.iter_mut().zip(cmd.linear) {
            *p += v * dt;
        }
        self.roll += cmd.angular[0] * dt;
        self.pitch += cmd.angular[1] * dt;
        self.yaw = wrap(self.yaw + cmd.angular[2] * dt);
    }

    pub fn set_opening(&mut self, opening: f64) {
        self.finger_opening = opening.clamp(0.0, self.opening_max);
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VelocityCommand {
    pub linear: [f64; 3],
    pub angular: [f64; 3],
}

impl VelocityCommand {
    pub fn linear_speed(&self) -> f64 {
        self.linear.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scales the linear part down to `limits.linear` and clamps each angular
    /// component to `limits.angular`.
    pub fn clamped(mut self, limits: SpeedLimits) -> Self {
        let speed = self.linear_speed();
        if speed > limits.linear && speed > 0.0 {
            let k = limits.linear / speed;
            self.linear.iter_mut().for_each(|v| *v *= k);
        }
        self.angular.iter_mut().for_each(|w| *w = w.clamp(-limits.angular, limits.angular));
        self
    }
}

/// Proportional position-based servoing towards a top-down grasp. The gripper
/// stays vertical, so only yaw is commanded.
pub fn pbvs_velocity(current: &GripperState, target: &GraspWorld, gains: Gains, max_speed: SpeedLimits) -> VelocityCommand {
    let t = [target.x, target.y, target.z];
    let mut linear = [0.0; 3];
    for i in 0..3 {
        linear[i] = gains.linear * (t[i] - current.position[i]);
    }
    let wz = gains.angular * angle_error(target.angle, current.yaw);
    VelocityCommand { linear, angular: [0.0, 0.0, wz] }.clamped(max_speed)
}

fn row_major(g: &GraspImage) -> (f64, f64) {
    (g.v, g.u)
}

/// Picks the grasp to follow this tick: the candidate nearest the previous
/// grasp in pixels, or the best one when nothing is tracked yet. Ties go to
/// higher quality, then to the earlier pixel in row-major order.
pub fn select_tracked_grasp(candidates: &[GraspImage], previous: Option<&GraspImage>) -> Result<GraspImage> {
    let better_quality = |a: &GraspImage, b: &GraspImage| {
        b.quality.total_cmp(&a.quality).then_with(|| {
            let (ka, kb) = (row_major(a), row_major(b));
            ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
        })
    };
    let best = match previous {
        None => candidates.iter().min_by(|a, b| better_quality(a, b)),
        Some(p) => {
            let d2 = |g: &GraspImage| (g.u - p.u).powi(2) + (g.v - p.v).powi(2);
            candidates.iter().min_by(|a, b| d2(a).total_cmp(&d2(b)).then_with(|| better_quality(a, b)))
        }
    };
    best.copied().ok_or(Error::NoGrasp)
}

/// Least-squares velocity of the tracked grasp over a sliding window.
#[derive(Clone, Debug)]
pub struct VelocityEstimator {
    window: usize,
    samples: VecDeque<(f64, f64, f64, f64)>,
}

impl VelocityEstimator {
    pub fn new(window: usize) -> Self {
        Self { window: window.max(2), samples: VecDeque::new() }
    }

    pub fn reset(&mut self) {
        self.samples.clear();
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Records a world-frame grasp at time `t`. Angles are unwrapped against
    /// the previous sample so a half-turn wrap does not read as motion.
    pub fn push(&mut self, t: f64, g: &GraspWorld) {
        let angle = match self.samples.back() {
            Some(&(_, _, _, prev)) => prev + angle_error(g.angle, prev),
            None => g.angle,
        };
        self.samples.push_back((t, g.x, g.y, angle));
        while self.samples.len() > self.window {
            self.samples.pop_front();
        }
    }

    /// `(vx, vy, yaw rate)` once the window is at least half full.
    pub fn estimate(&self) -> Option<[f64; 3]> {
        let n = self.samples.len();
        if n < (self.window / 2).max(2) {
            return None;
        }
        let nf = n as f64;
        let t_mean = self.samples.iter().map(|s| s.0).sum::<f64>() / nf;
        let stt: f64 = self.samples.iter().map(|s| (s.0 - t_mean).powi(2)).sum();
        if stt <= 0.0 {
            return None;
        }
        let slope = |f: fn(&(f64, f64, f64, f64)) -> f64| {
            let mean = self.samples.iter().map(f).sum::<f64>() / nf;
            self.samples.iter().map(|s| (s.0 - t_mean) * (f(s) - mean)).sum::<f64>() / stt
        };
        Some([slope(|s| s.1), slope(|s| s.2), slope(|s| s.3)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(u: f64, v: f64, q: f64) -> GraspImage {
        GraspImage { u, v, angle: 0.0, width: 10.0, quality: q }
    }

    #[test]
    fn tracking_examples() {
        let c = [g(101.0, 101.0, 0.8), g(200.0, 200.0, 0.9)];
        let prev = g(100.0, 100.0, 0.5);
        assert_eq!(select_tracked_grasp(&c, Some(&prev)).unwrap(), c[0]);
        assert_eq!(select_tracked_grasp(&c, None).unwrap(), c[1]);
        let tie = [g(110.0, 100.0, 0.4), g(90.0, 100.0, 0.7)];
        assert_eq!(select_tracked_grasp(&tie, Some(&prev)).unwrap(), tie[1]);
        assert!(matches!(select_tracked_grasp(&[], None), Err(Error::NoGrasp)));
    }

    #[test]
    fn full_tie_goes_to_the_earlier_pixel() {
        let prev = g(100.0, 100.0, 0.5);
        let c = [g(100.0, 110.0, 0.7), g(100.0, 90.0, 0.7)];
        assert_eq!(select_tracked_grasp(&c, Some(&prev)).unwrap(), c[1]);
    }

    fn target(x: f64, y: f64, z: f64, angle: f64) -> GraspWorld {
        GraspWorld { x, y, z, angle, width: 0.02, quality: 1.0 }
    }

    #[test]
    fn proportional_law_examples() {
        let limits = SpeedLimits { linear: 0.5, angular: 1.0 };
        let cur = GripperState::at([0.0, 0.0, 0.0], 0.08, limits);
        let gains = Gains { linear: 1.0, angular: 1.0 };
        assert_eq!(pbvs_velocity(&cur, &target(0.0, 0.0, 0.0, 0.0), gains, limits), VelocityCommand::default());
        let cmd = pbvs_velocity(&cur, &target(0.1, 0.0, 0.0, 0.0), gains, limits);
        assert!((cmd.linear[0] - 0.1).abs() < 1e-15 && cmd.linear[1] == 0.0 && cmd.linear[2] == 0.0);
        let limits = SpeedLimits { linear: 0.25, angular: 1.0 };
        let cmd = pbvs_velocity(&cur, &target(1.2, 1.6, 0.0, 0.0), gains, limits);
        assert!((cmd.linear_speed() - 0.25).abs() < 1e-12);
        assert!((cmd.linear[0] / cmd.linear[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn yaw_error_takes_the_short_way_round() {
        let limits = SpeedLimits::default();
        let mut cur = GripperState::at([0.0; 3], 0.08, limits);
        cur.yaw = 1.4;
        let cmd = pbvs_velocity(&cur, &target(0.0, 0.0, 0.0, -1.4), Gains::default(), limits);
        // -1.4 is 0.34 rad ahead of 1.4 modulo pi.
        assert!(cmd.angular[2] > 0.0 && cmd.angular[2] < 1.0);
        assert_eq!((cmd.angular[0], cmd.angular[1]), (0.0, 0.0));
    }

    #[test]
    fn estimator_recovers_constant_velocity() {
        let mut e = VelocityEstimator::new(25);
        for i in 0..30 {
            let t = i as f64 * 0.02;
            e.push(t, &target(0.01 + 0.02 * t, -0.01 * t, 0.0, wrap(1.5 + 0.3 * t)));
        }
        let [vx, vy, w] = e.estimate().unwrap();
        assert!((vx - 0.02).abs() < 1e-9 && (vy + 0.01).abs() < 1e-9 && (w - 0.3).abs() < 1e-9);
    }
}
