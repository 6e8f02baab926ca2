use log::warn;
use nalgebra::{Cholesky, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{BodyVelocity, DynamicsError, GeneralizedForce, WindForce};

/// Parameter document of the bundled illustrative vessel.
pub const EXAMPLE_FERRY: &str = include_str!("../../models/example-ferry.toml");

/// Coefficients of the rigid-body part of the Coriolis matrix.
///
/// The rigid-body Coriolis matrix uses the form that depends on yaw rate
/// only; the hydrodynamic part is built from the added mass `M − M_RB`.
/// Setting `rigid_body_mass = 0` attributes all of `M` to the hydrodynamic
/// part, which yields the classic combined 3-DOF form.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoriolisCoeffs {
    #[serde(default)]
    pub rigid_body_mass: f64,
    /// Longitudinal center-of-gravity offset (m).
    #[serde(default)]
    pub x_g: f64,
}

/// One thruster, positioned relative to the center of gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thruster {
    #[serde(rename = "x")]
    pub d_x: f64,
    #[serde(rename = "y")]
    pub d_y: f64,
    pub max_force: f64,
    pub angle_min: f64,
    pub angle_max: f64,
    /// Defaults to `angle_min != angle_max` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steerable: Option<bool>,
}

impl Thruster {
    pub fn is_steerable(&self) -> bool {
        self.steerable.unwrap_or(self.angle_min != self.angle_max)
    }

    /// Physical angle for a normalized command: `0.5 ↦ 0`, `0 ↦ angle_min`, `1 ↦ angle_max`.
    pub fn angle_from_norm(&self, angle_norm: f64) -> f64 {
        if !self.is_steerable() {
            return self.angle_min;
        }
        if angle_norm <= 0.5 {
            self.angle_min * (0.5 - angle_norm) / 0.5
        } else {
            self.angle_max * (angle_norm - 0.5) / 0.5
        }
    }

    /// Inverse of [`Thruster::angle_from_norm`] for steerable thrusters.
    pub fn norm_from_angle(&self, angle: f64) -> f64 {
        if !self.is_steerable() {
            return 0.5;
        }
        let a = angle.clamp(self.angle_min, self.angle_max);
        if a < 0.0 {
            0.5 - 0.5 * a / self.angle_min
        } else if a > 0.0 {
            0.5 + 0.5 * a / self.angle_max
        } else {
            0.5
        }
    }

    fn validate(&self, index: usize) -> Result<(), DynamicsError> {
        let bad = |reason: &str| DynamicsError::ThrusterBounds { index, reason: reason.to_string() };
        let values = [self.d_x, self.d_y, self.max_force, self.angle_min, self.angle_max];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite value"));
        }
        if self.max_force <= 0.0 {
            return Err(bad("max_force must be > 0"));
        }
        if self.angle_min > self.angle_max {
            return Err(bad("angle_min > angle_max"));
        }
        if self.is_steerable() {
            if self.angle_min > 0.0 || self.angle_max < 0.0 {
                return Err(bad("steerable thruster range must contain 0"));
            }
        } else if self.angle_min != self.angle_max {
            return Err(bad("fixed thruster needs angle_min == angle_max"));
        }
        Ok(())
    }
}

/// Normalized command for one thruster; both entries in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrusterCommand {
    pub thrust: f64,
    pub angle: f64,
}

impl ThrusterCommand {
    pub const NEUTRAL: Self = Self { thrust: 0.0, angle: 0.5 };

    /// Clamps into `[0, 1]`; NaN maps to the neutral value.
    pub fn new(thrust: f64, angle: f64) -> Self {
        let clamp = |x: f64, neutral: f64| if x.is_nan() { neutral } else { x.clamp(0.0, 1.0) };
        Self { thrust: clamp(thrust, 0.0), angle: clamp(angle, 0.5) }
    }
}

/// Normalized commands for every thruster of a vessel.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand(pub Vec<ThrusterCommand>);

impl ControlCommand {
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self(pairs.into_iter().map(|(t, a)| ThrusterCommand::new(t, a)).collect())
    }

    pub fn single(thrust: f64, angle: f64) -> Self {
        Self(vec![ThrusterCommand::new(thrust, angle)])
    }

    /// Zero thrust, straight angle, for `n` thrusters.
    pub fn neutral(n: usize) -> Self {
        Self(vec![ThrusterCommand::NEUTRAL; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// On-disk vessel parameter document. See `models/README.md` for the schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselSpec {
    pub name: String,
    /// Overall length (m); used for the default collision footprint.
    pub length: f64,
    /// Combined rigid-body and added mass matrix.
    pub mass_matrix: [[f64; 3]; 3],
    #[serde(default)]
    pub coriolis: CoriolisCoeffs,
    pub damping_linear: [[f64; 3]; 3],
    /// Coefficients multiplying `|u|u`, `|v|v`, `|r|r`.
    pub damping_quadratic: [f64; 3],
    #[serde(default, rename = "thruster")]
    pub thrusters: Vec<Thruster>,
}

/// A validated vessel model with its precomputed inverse mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VesselParams {
    spec: VesselSpec,
    mass: Matrix3<f64>,
    mass_inv: Matrix3<f64>,
    damping_linear: Matrix3<f64>,
}

fn matrix(rows: &[[f64; 3]; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| rows[i][j])
}

impl VesselParams {
    pub fn from_spec(spec: VesselSpec) -> Result<Self, DynamicsError> {
        let finite = |m: &[[f64; 3]; 3]| m.iter().flatten().all(|v| v.is_finite());
        if !finite(&spec.mass_matrix) {
            return Err(DynamicsError::NonFinite("mass_matrix"));
        }
        if !finite(&spec.damping_linear) {
            return Err(DynamicsError::NonFinite("damping_linear"));
        }
        if !spec.damping_quadratic.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::NonFinite("damping_quadratic"));
        }
        if !spec.coriolis.rigid_body_mass.is_finite() || !spec.coriolis.x_g.is_finite() {
            return Err(DynamicsError::NonFinite("coriolis"));
        }
        if !spec.length.is_finite() || spec.length <= 0.0 {
            return Err(DynamicsError::NonFinite("length"));
        }

        let mass = matrix(&spec.mass_matrix);
        let scale = mass.abs().max().max(1.0);
        for row in 0..3 {
            for col in (row + 1)..3 {
                if (mass[(row, col)] - mass[(col, row)]).abs() > 1e-9 * scale {
                    return Err(DynamicsError::NotSymmetric { row, col });
                }
            }
        }
        let mass_inv = Cholesky::new(mass)
            .ok_or(DynamicsError::NotPositiveDefinite)?
            .inverse();

        for (i, t) in spec.thrusters.iter().enumerate() {
            t.validate(i)?;
        }

        let params = Self {
            damping_linear: matrix(&spec.damping_linear),
            spec,
            mass,
            mass_inv,
        };
        if !params.is_dissipative() {
            warn!("vessel `{}`: damping is not dissipative for all sampled velocities", params.name());
        }
        Ok(params)
    }

    /// The bundled illustrative single-thruster ferry.
    pub fn example_ferry() -> Self {
        load_model(EXAMPLE_FERRY).expect("bundled example model is valid")
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn length(&self) -> f64 {
        self.spec.length
    }

    pub fn spec(&self) -> &VesselSpec {
        &self.spec
    }

    pub fn mass(&self) -> &Matrix3<f64> {
        &self.mass
    }

    pub fn mass_inv(&self) -> &Matrix3<f64> {
        &self.mass_inv
    }

    pub fn damping_linear(&self) -> &Matrix3<f64> {
        &self.damping_linear
    }

    pub fn thrusters(&self) -> &[Thruster] {
        &self.spec.thrusters
    }

    /// Kinetic energy `½·ν_rᵀ·M·ν_r` of the relative motion.
    pub fn kinetic_energy(&self, nu_r: &BodyVelocity) -> f64 {
        let v = nu_r.to_vector();
        0.5 * v.dot(&(self.mass * v))
    }

    /// Samples `νᵀ·D(ν)·ν ≥ 0` over a fixed set of directions and magnitudes.
    pub fn is_dissipative(&self) -> bool {
        let dirs = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 1.0, 0.0],
            [1.0, -1.0, 0.0],
            [0.0, 1.0, 1.0],
            [0.0, 1.0, -1.0],
            [1.0, 0.0, 1.0],
            [1.0, 0.0, -1.0],
            [1.0, 1.0, 1.0],
            [1.0, -1.0, 1.0],
            [-1.0, 1.0, 1.0],
        ];
        dirs.iter().all(|d| {
            [0.01, 0.1, 1.0, 10.0].iter().all(|&s| {
                let nu = BodyVelocity::new(d[0] * s, d[1] * s, d[2] * s);
                let v = nu.to_vector();
                v.dot(&(damping(self, &nu) * v)) >= 0.0
            })
        })
    }
}

/// Parses and validates a vessel parameter document.
pub fn load_model(document: &str) -> Result<VesselParams, DynamicsError> {
    let spec: VesselSpec = toml::from_str(document).map_err(|e| DynamicsError::Parse(e.to_string()))?;
    VesselParams::from_spec(spec)
}

/// Maps normalized commands to physical thrust and angle, then applies the
/// allocation matrix: columns `[cos θ, sin θ, d_x·sin θ − d_y·cos θ]` times `F`.
pub fn thruster_allocation(
    cmd: &ControlCommand,
    params: &VesselParams,
) -> Result<GeneralizedForce, DynamicsError> {
    let thrusters = params.thrusters();
    if cmd.len() != thrusters.len() {
        return Err(DynamicsError::CommandLength { expected: thrusters.len(), got: cmd.len() });
    }
    let mut tau = Vector3::zeros();
    for (t, c) in thrusters.iter().zip(cmd.0.iter()) {
        let force = c.thrust * t.max_force;
        let (s, co) = t.angle_from_norm(c.angle).sin_cos();
        tau += Vector3::new(co, s, t.d_x * s - t.d_y * co) * force;
    }
    Ok(GeneralizedForce::from_vector(&tau))
}

/// Coriolis and centripetal matrix `C(ν_r) = C_RB(r) + C_A(ν_r)`; skew-symmetric.
pub fn coriolis(params: &VesselParams, nu_r: &BodyVelocity) -> Matrix3<f64> {
    let m = params.spec.coriolis.rigid_body_mass;
    let mxg = m * params.spec.coriolis.x_g;
    let mm = &params.mass;
    // Added-mass entries: M_A = M − M_RB.
    let a11 = mm[(0, 0)] - m;
    let a22 = mm[(1, 1)] - m;
    let a23 = mm[(1, 2)] - mxg;
    let BodyVelocity { u, v, r } = *nu_r;

    let c13 = -mxg * r - a22 * v - a23 * r;
    let c23 = a11 * u;
    Matrix3::new(
        0.0, -m * r, c13, //
        m * r, 0.0, c23, //
        -c13, -c23, 0.0,
    )
}

/// `D(ν_r) = D_linear + diag(d_u·|u|, d_v·|v|, d_r·|r|)`.
pub fn damping(params: &VesselParams, nu_r: &BodyVelocity) -> Matrix3<f64> {
    let q = params.spec.damping_quadratic;
    let mut d = params.damping_linear;
    d[(0, 0)] += q[0] * nu_r.u.abs();
    d[(1, 1)] += q[1] * nu_r.v.abs();
    d[(2, 2)] += q[2] * nu_r.r.abs();
    d
}

/// `ν̇_r = M⁻¹·(τ + τ_wind − C(ν_r)·ν_r − D(ν_r)·ν_r)`.
pub fn acceleration(
    params: &VesselParams,
    nu_r: &BodyVelocity,
    tau: &GeneralizedForce,
    tau_wind: &WindForce,
) -> BodyVelocity {
    let v = nu_r.to_vector();
    let rhs = tau.to_vector() + tau_wind.to_vector()
        - coriolis(params, nu_r) * v
        - damping(params, nu_r) * v;
    BodyVelocity::from_vector(&(params.mass_inv * rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn single_thruster(d_x: f64, d_y: f64, angle_min: f64, angle_max: f64, max_force: f64) -> VesselParams {
        let mut spec = VesselParams::example_ferry().spec().clone();
        spec.thrusters = vec![Thruster { d_x, d_y, max_force, angle_min, angle_max, steerable: None }];
        VesselParams::from_spec(spec).unwrap()
    }

    #[test]
    fn half_ahead_straight_thrust() {
        let p = single_thruster(0.0, 0.0, -0.5, 0.5, 500.0);
        let tau = thruster_allocation(&ControlCommand::single(0.5, 0.5), &p).unwrap();
        assert_eq!(tau, GeneralizedForce::new(250.0, 0.0, 0.0));
    }

    #[test]
    fn stern_thruster_at_right_angle() {
        let p = single_thruster(-2.0, 0.0, -FRAC_PI_2, FRAC_PI_2, 100.0);
        let tau = thruster_allocation(&ControlCommand::single(1.0, 1.0), &p).unwrap();
        // Row 3: d_x·sin θ − d_y·cos θ = −2·1 − 0 → −200 N·m.
        assert!(tau.surge.abs() < 1e-12);
        assert!((tau.sway - 100.0).abs() < 1e-12);
        assert!((tau.yaw + 200.0).abs() < 1e-12);
    }

    #[test]
    fn zero_thrust_gives_zero_force() {
        let p = VesselParams::example_ferry();
        let cmd = ControlCommand::new(p.thrusters().iter().map(|_| (0.0, 0.9)));
        assert_eq!(thruster_allocation(&cmd, &p).unwrap(), GeneralizedForce::ZERO);
    }

    #[test]
    fn command_length_mismatch() {
        let p = VesselParams::example_ferry();
        let err = thruster_allocation(&ControlCommand::neutral(3), &p).unwrap_err();
        assert!(matches!(err, DynamicsError::CommandLength { expected: 1, got: 3 }));
    }

    #[test]
    fn asymmetric_angle_map() {
        let t = Thruster { d_x: 0.0, d_y: 0.0, max_force: 1.0, angle_min: -0.2, angle_max: 0.6, steerable: None };
        assert_eq!(t.angle_from_norm(0.5), 0.0);
        assert_eq!(t.angle_from_norm(0.0), -0.2);
        assert_eq!(t.angle_from_norm(1.0), 0.6);
        assert!((t.angle_from_norm(0.25) + 0.1).abs() < 1e-15);
        assert!((t.angle_from_norm(0.75) - 0.3).abs() < 1e-15);
        for n in [0.0, 0.1, 0.5, 0.8, 1.0] {
            assert!((t.norm_from_angle(t.angle_from_norm(n)) - n).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_thruster_ignores_angle() {
        let t = Thruster { d_x: 2.0, d_y: 0.0, max_force: 1.0, angle_min: FRAC_PI_2, angle_max: FRAC_PI_2, steerable: None };
        assert_eq!(t.angle_from_norm(0.1), FRAC_PI_2);
        assert_eq!(t.angle_from_norm(0.9), FRAC_PI_2);
    }

    #[test]
    fn command_clamping() {
        let c = ThrusterCommand::new(1.7, -0.3);
        assert_eq!((c.thrust, c.angle), (1.0, 0.0));
        let c = ThrusterCommand::new(f64::NAN, f64::NAN);
        assert_eq!(c, ThrusterCommand::NEUTRAL);
    }

    #[test]
    fn ferry_mass_is_spd_by_eigenvalues() {
        let p = VesselParams::example_ferry();
        let eig = p.mass().symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e > 0.0), "{eig:?}");
    }

    #[test]
    fn asymmetric_mass_rejected() {
        let doc = EXAMPLE_FERRY.replace("[0.0, 2300.0, 50.0]", "[1.0, 2300.0, 50.0]");
        assert_ne!(doc, EXAMPLE_FERRY);
        assert_eq!(load_model(&doc).unwrap_err(), DynamicsError::NotSymmetric { row: 0, col: 1 });
    }

    #[test]
    fn indefinite_mass_rejected() {
        let doc = EXAMPLE_FERRY.replace("[2100.0, 0.0, 0.0]", "[-2100.0, 0.0, 0.0]");
        assert_eq!(load_model(&doc).unwrap_err(), DynamicsError::NotPositiveDefinite);
    }

    #[test]
    fn garbage_document() {
        assert!(matches!(load_model("name = ").unwrap_err(), DynamicsError::Parse(_)));
    }

    #[test]
    fn bad_thruster_bounds() {
        let doc = EXAMPLE_FERRY.replace("max_force = 500.0", "max_force = -1.0");
        assert!(matches!(load_model(&doc).unwrap_err(), DynamicsError::ThrusterBounds { index: 0, .. }));
    }

    #[test]
    fn zero_thrusters_is_drift_only() {
        let mut spec = VesselParams::example_ferry().spec().clone();
        spec.thrusters.clear();
        let doc = toml::to_string(&spec).unwrap();
        let p = load_model(&doc).unwrap();
        assert!(p.thrusters().is_empty());
        assert_eq!(thruster_allocation(&ControlCommand::default(), &p).unwrap(), GeneralizedForce::ZERO);
    }

    #[test]
    fn coriolis_zero_at_rest() {
        let p = VesselParams::example_ferry();
        assert_eq!(coriolis(&p, &BodyVelocity::ZERO), Matrix3::zeros());
    }

    #[test]
    fn coriolis_hand_expansion_on_ferry() {
        let p = VesselParams::example_ferry();
        let spec = p.spec();
        let (u, v, r) = (1.0, 0.5, 0.1);
        let m = spec.coriolis.rigid_body_mass;
        let xg = spec.coriolis.x_g;
        let mm = spec.mass_matrix;
        // Written out entry by entry from C_RB(r) + C_A(ν_r).
        let x_udot = -(mm[0][0] - m);
        let y_vdot = -(mm[1][1] - m);
        let y_rdot = -(mm[1][2] - m * xg);
        let expected = [
            [0.0, -m * r, -m * xg * r + y_vdot * v + y_rdot * r],
            [m * r, 0.0, -x_udot * u],
            [m * xg * r - y_vdot * v - y_rdot * r, x_udot * u, 0.0],
        ];
        let c = coriolis(&p, &BodyVelocity::new(u, v, r));
        for i in 0..3 {
            for j in 0..3 {
                assert!((c[(i, j)] - expected[i][j]).abs() < 1e-9, "C[{i}][{j}]");
            }
        }
    }

    #[test]
    fn damping_examples() {
        let p = VesselParams::example_ferry();
        assert_eq!(damping(&p, &BodyVelocity::ZERO), *p.damping_linear());

        let nu = BodyVelocity::new(0.3, -0.2, 0.05);
        let nu2 = BodyVelocity::new(0.6, -0.4, 0.1);
        let nl1 = damping(&p, &nu) - p.damping_linear();
        let nl2 = damping(&p, &nu2) - p.damping_linear();
        assert!((nl2 - nl1 * 2.0).abs().max() < 1e-12);

        let mut spec = p.spec().clone();
        spec.damping_linear = [[50.0, 0.0, 0.0], [0.0, 200.0, 0.0], [0.0, 0.0, 300.0]];
        spec.damping_quadratic = [10.0, 0.0, 0.0];
        let p = VesselParams::from_spec(spec).unwrap();
        let nu = BodyVelocity::new(1.0, 0.0, 0.0);
        let f = damping(&p, &nu) * nu.to_vector();
        assert_eq!(f[0], 60.0);
    }

    #[test]
    fn acceleration_equilibrium_and_first_step() {
        let p = VesselParams::example_ferry();
        let a = acceleration(&p, &BodyVelocity::ZERO, &GeneralizedForce::ZERO, &GeneralizedForce::ZERO);
        assert_eq!(a, BodyVelocity::ZERO);

        let mut spec = p.spec().clone();
        spec.mass_matrix = [[1000.0, 0.0, 0.0], [0.0, 1500.0, 0.0], [0.0, 0.0, 2000.0]];
        let p = VesselParams::from_spec(spec).unwrap();
        let a = acceleration(&p, &BodyVelocity::ZERO, &GeneralizedForce::new(250.0, 0.0, 0.0), &GeneralizedForce::ZERO);
        assert!((a.u - 0.25).abs() < 1e-15 && a.v.abs() < 1e-15 && a.r.abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn coriolis_is_power_neutral(u in -5.0f64..5.0, v in -5.0f64..5.0, r in -2.0f64..2.0) {
            let p = VesselParams::example_ferry();
            let nu = BodyVelocity::new(u, v, r);
            let x = nu.to_vector();
            prop_assert!(x.dot(&(coriolis(&p, &nu) * x)).abs() < 1e-10);
        }

        #[test]
        fn acceleration_matches_linear_solve(
            u in -3.0f64..3.0, v in -3.0f64..3.0, r in -1.0f64..1.0,
            fx in -500.0f64..500.0, fy in -500.0f64..500.0, fn_ in -1000.0f64..1000.0,
        ) {
            let p = VesselParams::example_ferry();
            let nu = BodyVelocity::new(u, v, r);
            let tau = GeneralizedForce::new(fx, fy, fn_);
            let a = acceleration(&p, &nu, &tau, &GeneralizedForce::ZERO).to_vector();
            let x = nu.to_vector();
            let b = tau.to_vector() - coriolis(&p, &nu) * x - damping(&p, &nu) * x;
            let solved = p.mass().lu().solve(&b).unwrap();
            prop_assert!((a - solved).abs().max() <= 1e-10 * solved.abs().max().max(1.0));
        }
    }
}
