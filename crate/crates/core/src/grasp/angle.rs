use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Wraps into `[-pi/2, pi/2)`. Non-finite input passes through unchanged.
pub fn wrap(a: f64) -> f64 {
    let w = (a + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    // rem_euclid can round up to exactly pi for inputs just below a multiple.
    if w >= FRAC_PI_2 {
        w - PI
    } else {
        w
    }
}

/// Grasp angles are antipodal: `a` and `a + pi` are the same grasp.
pub fn wrap_angle(a: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::InvalidArgument(format!("angle {a} is not finite")));
    }
    Ok(wrap(a))
}

/// Unsigned difference between two grasp angles, in `[0, pi/2]`.
pub fn angle_offset(a: f64, b: f64) -> Result<f64> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument(format!("angles ({a}, {b}) must be finite")));
    }
    let d = (a - b).abs().rem_euclid(PI);
    Ok(d.min(PI - d).max(0.0))
}

/// Signed rotation that takes `from` to the nearest antipodal copy of `to`.
pub fn angle_error(to: f64, from: f64) -> f64 {
    wrap(to - from)
}
