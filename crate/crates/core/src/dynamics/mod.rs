//! 3-DOF maneuvering model: kinematics, current-relative dynamics, thruster
//! allocation and fixed-step integration.
//!
//! The integrated state is the earth-fixed pose together with the
//! body-fixed velocity *relative to the water* (`nu_r`). Under an
//! irrotational, constant current the relative-velocity form
//! `M·ν̇_r + C(ν_r)·ν_r + D(ν_r)·ν_r = τ + τ_wind` holds with a single mass,
//! Coriolis and damping matrix; absolute velocity is recovered as
//! `ν = ν_r + ν_c(ψ)`.

mod integrate;
mod kinematics;
mod vessel;

pub use integrate::{rk4_step, step, Simulation, DEFAULT_DT};
pub use kinematics::{current_body, relative_velocity, rotation_matrix};
pub use vessel::{
    acceleration, coriolis, damping, load_model, thruster_allocation, ControlCommand,
    CoriolisCoeffs, ThrusterCommand, Thruster, VesselParams, VesselSpec, EXAMPLE_FERRY,
};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::wrap_angle;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("failed to parse vessel document: {0}")]
    Parse(String),
    #[error("mass matrix is not symmetric: M[{row}][{col}] != M[{col}][{row}]")]
    NotSymmetric { row: usize, col: usize },
    #[error("mass matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("thruster {index}: {reason}")]
    ThrusterBounds { index: usize, reason: String },
    #[error("control command has {got} entries, vessel has {expected} thrusters")]
    CommandLength { expected: usize, got: usize },
    #[error("integration diverged: `{component}` is not finite")]
    Diverged { component: &'static str },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// Earth-fixed pose `[x, y, ψ]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading, always kept in (−π, π].
    pub psi: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, psi: f64) -> Self {
        Self { x, y, psi: wrap_angle(psi) }
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }

    /// Bearing from this pose's position to `(x, y)`.
    pub fn bearing_to(&self, x: f64, y: f64) -> f64 {
        (y - self.y).atan2(x - self.x)
    }
}

/// Body-fixed velocity `[u, v, r]`. Used for absolute, relative and current velocity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub u: f64,
    pub v: f64,
    pub r: f64,
}

impl BodyVelocity {
    pub const ZERO: Self = Self { u: 0.0, v: 0.0, r: 0.0 };

    pub fn new(u: f64, v: f64, r: f64) -> Self {
        Self { u, v, r }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.r)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self { u: v[0], v: v[1], r: v[2] }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.r.is_finite()
    }
}

/// Generalized force `[X, Y, N]` in the body frame (N, N, N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneralizedForce {
    pub surge: f64,
    pub sway: f64,
    pub yaw: f64,
}

impl GeneralizedForce {
    pub const ZERO: Self = Self { surge: 0.0, sway: 0.0, yaw: 0.0 };

    pub fn new(surge: f64, sway: f64, yaw: f64) -> Self {
        Self { surge, sway, yaw }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.surge, self.sway, self.yaw)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self { surge: v[0], sway: v[1], yaw: v[2] }
    }
}

/// Wind load, supplied directly as a body-frame generalized force.
pub type WindForce = GeneralizedForce;

/// Irrotational current: speed `V_c` and earth-frame heading `β_c`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurrentSpec {
    pub speed: f64,
    pub heading: f64,
}

impl CurrentSpec {
    pub const NONE: Self = Self { speed: 0.0, heading: 0.0 };

    /// Negative or non-finite speeds are rejected; the heading is wrapped.
    pub fn new(speed: f64, heading: f64) -> Result<Self, DynamicsError> {
        if !speed.is_finite() || speed < 0.0 {
            return Err(DynamicsError::NonFinite("current.speed"));
        }
        if !heading.is_finite() {
            return Err(DynamicsError::NonFinite("current.heading"));
        }
        Ok(Self { speed, heading: wrap_angle(heading) })
    }

    /// Earth-frame current velocity `η̇_c`.
    pub fn earth_velocity(&self) -> Vector3<f64> {
        Vector3::new(self.speed * self.heading.cos(), self.speed * self.heading.sin(), 0.0)
    }
}

/// Pose, relative velocity and time of one simulated vessel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimState {
    pub pose: Pose,
    pub nu_r: BodyVelocity,
    pub t: f64,
}

impl SimState {
    /// State with zero velocity relative to the water.
    pub fn drifting(pose: Pose) -> Self {
        Self { pose, nu_r: BodyVelocity::ZERO, t: 0.0 }
    }

    /// State at rest over ground: `ν = 0`, hence `ν_r = −ν_c(ψ)`.
    pub fn at_rest(pose: Pose, current: &CurrentSpec) -> Self {
        let nu_c = current_body(pose.psi, current);
        Self {
            pose,
            nu_r: BodyVelocity::new(-nu_c.u, -nu_c.v, -nu_c.r),
            t: 0.0,
        }
    }

    /// Absolute body-frame velocity `ν = ν_r + ν_c(ψ)`.
    pub fn absolute_velocity(&self, current: &CurrentSpec) -> BodyVelocity {
        let nu_c = current_body(self.pose.psi, current);
        BodyVelocity::new(self.nu_r.u + nu_c.u, self.nu_r.v + nu_c.v, self.nu_r.r + nu_c.r)
    }

    /// Earth-frame velocity over ground `[ẋ, ẏ]`.
    pub fn ground_velocity(&self, current: &CurrentSpec) -> (f64, f64) {
        let nu = self.absolute_velocity(current).to_vector();
        let eta_dot = rotation_matrix(self.pose.psi) * nu;
        (eta_dot[0], eta_dot[1])
    }

    /// Speed over ground, as a GNSS receiver would report it.
    pub fn ground_speed(&self, current: &CurrentSpec) -> f64 {
        let (vx, vy) = self.ground_velocity(current);
        vx.hypot(vy)
    }
}
