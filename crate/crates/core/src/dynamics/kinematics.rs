use nalgebra::Matrix3;

use super::{BodyVelocity, CurrentSpec};

/// Planar rotation from body to earth frame about the vertical axis.
pub fn rotation_matrix(psi: f64) -> Matrix3<f64> {
    let (s, c) = psi.sin_cos();
    Matrix3::new(
        c, -s, 0.0, //
        s, c, 0.0, //
        0.0, 0.0, 1.0,
    )
}

/// Current velocity expressed in the body frame, `ν_c = Rᵀ(ψ)·η̇_c`.
///
/// The yaw component is zero for every input (irrotational current).
pub fn current_body(psi: f64, current: &CurrentSpec) -> BodyVelocity {
    let v = rotation_matrix(psi).transpose() * current.earth_velocity();
    BodyVelocity::new(v[0], v[1], 0.0)
}

pub fn relative_velocity(nu: &BodyVelocity, nu_c: &BodyVelocity) -> BodyVelocity {
    BodyVelocity::new(nu.u - nu_c.u, nu.v - nu_c.v, nu.r - nu_c.r)
}
