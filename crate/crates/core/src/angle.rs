use std::f64::consts::PI;

/// Wraps an angle into (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    let w = angle.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Signed difference `a − b` wrapped into (−π, π].
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}
