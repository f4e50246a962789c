//! Float functions for `no_std` builds.

pub(crate) use core::f64::consts::PI;
pub(crate) use libm::{atan, atan2, ceil, cos, exp, floor, log, pow, round, sin, sqrt};

pub(crate) const TAU: f64 = 2.0 * PI;

/// Angle in degrees whose cosine is `c` (clamped to `[-1, 1]`).
pub(crate) fn acos_deg(c: f64) -> f64 {
    libm::acos(c.clamp(-1.0, 1.0)) * 180.0 / PI
}
