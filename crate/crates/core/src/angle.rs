use std::f64::consts::PI;

const TWO_PI: f64 = 2.0 * PI;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let mut r = angle.rem_euclid(TWO_PI);
    if r > PI {
        r -= TWO_PI;
    }
    r
}
