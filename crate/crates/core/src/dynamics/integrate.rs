use nalgebra::{Vector3, Vector6};

use super::{
    acceleration, current_body, rotation_matrix, thruster_allocation, BodyVelocity, ControlCommand,
    CurrentSpec, DynamicsError, GeneralizedForce, Pose, SimState, VesselParams, WindForce,
};
use crate::angle::wrap_angle;

/// Default integration step (s).
pub const DEFAULT_DT: f64 = 0.02;

const COMPONENTS: [&str; 6] = ["x", "y", "psi", "u", "v", "r"];

fn derivative(
    params: &VesselParams,
    current: &CurrentSpec,
    tau: &GeneralizedForce,
    wind: &WindForce,
    s: &Vector6<f64>,
) -> Vector6<f64> {
    let psi = s[2];
    let nu_r = BodyVelocity::new(s[3], s[4], s[5]);
    // ν_c is re-evaluated at every stage so its rotation with ψ is captured.
    let nu_c = current_body(psi, current);
    let nu = Vector3::new(nu_r.u + nu_c.u, nu_r.v + nu_c.v, nu_r.r + nu_c.r);
    let eta_dot = rotation_matrix(psi) * nu;
    let nu_r_dot = acceleration(params, &nu_r, tau, wind);
    Vector6::new(eta_dot[0], eta_dot[1], eta_dot[2], nu_r_dot.u, nu_r_dot.v, nu_r_dot.r)
}

/// One classical RK4 step with a precomputed control force.
pub fn rk4_step(
    state: &SimState,
    tau: &GeneralizedForce,
    current: &CurrentSpec,
    wind: &WindForce,
    params: &VesselParams,
    dt: f64,
) -> Result<SimState, DynamicsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DynamicsError::InvalidStep(dt));
    }
    let s0 = Vector6::new(
        state.pose.x,
        state.pose.y,
        state.pose.psi,
        state.nu_r.u,
        state.nu_r.v,
        state.nu_r.r,
    );
    let f = |s: &Vector6<f64>| derivative(params, current, tau, wind, s);
    let k1 = f(&s0);
    let k2 = f(&(s0 + k1 * (dt / 2.0)));
    let k3 = f(&(s0 + k2 * (dt / 2.0)));
    let k4 = f(&(s0 + k3 * dt));
    let s1 = s0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);

    if let Some(i) = s1.iter().position(|v| !v.is_finite()) {
        return Err(DynamicsError::Diverged { component: COMPONENTS[i] });
    }
    Ok(SimState {
        pose: Pose { x: s1[0], y: s1[1], psi: wrap_angle(s1[2]) },
        nu_r: BodyVelocity::new(s1[3], s1[4], s1[5]),
        t: state.t + dt,
    })
}

/// Advances the state by one fixed step `dt`.
pub fn step(
    state: &SimState,
    cmd: &ControlCommand,
    current: &CurrentSpec,
    wind: &WindForce,
    params: &VesselParams,
    dt: f64,
) -> Result<SimState, DynamicsError> {
    let tau = thruster_allocation(cmd, params)?;
    rk4_step(state, &tau, current, wind, params, dt)
}

/// A single vessel with its environment and a held control command.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub params: VesselParams,
    pub state: SimState,
    pub current: CurrentSpec,
    pub wind: WindForce,
    pub dt: f64,
    command: ControlCommand,
    tau: GeneralizedForce,
}

impl Simulation {
    pub fn new(params: VesselParams, state: SimState, dt: f64) -> Result<Self, DynamicsError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DynamicsError::InvalidStep(dt));
        }
        let command = ControlCommand::neutral(params.thrusters().len());
        Ok(Self {
            params,
            state,
            current: CurrentSpec::NONE,
            wind: WindForce::ZERO,
            dt,
            command,
            tau: GeneralizedForce::ZERO,
        })
    }

    pub fn command(&self) -> &ControlCommand {
        &self.command
    }

    /// Control force produced by the held command.
    pub fn control_force(&self) -> GeneralizedForce {
        self.tau
    }

    pub fn set_command(&mut self, cmd: ControlCommand) -> Result<(), DynamicsError> {
        self.tau = thruster_allocation(&cmd, &self.params)?;
        self.command = cmd;
        Ok(())
    }

    pub fn absolute_velocity(&self) -> BodyVelocity {
        self.state.absolute_velocity(&self.current)
    }

    /// Body-frame acceleration `ν̇_r` at the current state and command.
    pub fn acceleration(&self) -> BodyVelocity {
        acceleration(&self.params, &self.state.nu_r, &self.tau, &self.wind)
    }

    pub fn step(&mut self) -> Result<(), DynamicsError> {
        self.state = rk4_step(&self.state, &self.tau, &self.current, &self.wind, &self.params, self.dt)?;
        Ok(())
    }

    pub fn advance(&mut self, n: usize) -> Result<(), DynamicsError> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_fixed_point() {
        let p = VesselParams::example_ferry();
        let mut s = SimState::drifting(Pose::new(3.0, -2.0, 0.7));
        let start = s;
        let cmd = ControlCommand::neutral(1);
        for _ in 0..1000 {
            s = step(&s, &cmd, &CurrentSpec::NONE, &WindForce::ZERO, &p, DEFAULT_DT).unwrap();
        }
        assert!((s.pose.x - start.pose.x).abs() < 1e-12);
        assert!((s.pose.y - start.pose.y).abs() < 1e-12);
        assert!((s.pose.psi - start.pose.psi).abs() < 1e-12);
        assert!(s.nu_r.u.abs() + s.nu_r.v.abs() + s.nu_r.r.abs() < 1e-12);
        assert!((s.t - 20.0).abs() < 1e-9);
    }

    #[test]
    fn straight_thrust_stays_on_axis() {
        let p = VesselParams::example_ferry();
        let mut sim = Simulation::new(p, SimState::drifting(Pose::default()), DEFAULT_DT).unwrap();
        sim.set_command(ControlCommand::single(0.5, 0.5)).unwrap();
        sim.advance(3000).unwrap();
        assert!(sim.state.pose.y.abs() < 1e-6);
        assert!(sim.state.pose.psi.abs() < 1e-6);
        assert!(sim.state.pose.x > 50.0);
    }

    #[test]
    fn deterministic_bits() {
        let p = VesselParams::example_ferry();
        let cur = CurrentSpec::new(0.4, 2.0).unwrap();
        let wind = WindForce::new(10.0, -5.0, 3.0);
        let cmd = ControlCommand::single(0.7, 0.62);
        let s = SimState::at_rest(Pose::new(1.0, 2.0, 0.3), &cur);
        let a = step(&s, &cmd, &cur, &wind, &p, 0.05).unwrap();
        let b = step(&s, &cmd, &cur, &wind, &p, 0.05).unwrap();
        assert_eq!(a.pose.x.to_bits(), b.pose.x.to_bits());
        assert_eq!(a.nu_r.r.to_bits(), b.nu_r.r.to_bits());
    }

    #[test]
    fn divergence_is_reported() {
        let p = VesselParams::example_ferry();
        let mut s = SimState::drifting(Pose::default());
        s.nu_r.v = 1e200;
        let err = step(&s, &ControlCommand::neutral(1), &CurrentSpec::NONE, &WindForce::ZERO, &p, 0.1).unwrap_err();
        assert!(matches!(err, DynamicsError::Diverged { .. }), "{err:?}");
    }

    #[test]
    fn rejects_bad_dt() {
        let p = VesselParams::example_ferry();
        let s = SimState::default();
        for dt in [0.0, -0.1, f64::NAN] {
            assert!(step(&s, &ControlCommand::neutral(1), &CurrentSpec::NONE, &WindForce::ZERO, &p, dt).is_err());
        }
    }

    #[test]
    fn heading_stays_wrapped() {
        let p = VesselParams::example_ferry();
        let mut sim = Simulation::new(p, SimState::drifting(Pose::default()), DEFAULT_DT).unwrap();
        sim.set_command(ControlCommand::single(1.0, 0.0)).unwrap();
        for _ in 0..5000 {
            sim.step().unwrap();
            let psi = sim.state.pose.psi;
            assert!(psi > -std::f64::consts::PI && psi <= std::f64::consts::PI);
        }
    }
}
