//! Conversions between ordinary and angular frequency.

use core::f64::consts::TAU;

#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    f * TAU
}

#[inline]
pub fn angular_to_hz(w: f64) -> f64 {
    w / TAU
}
