use crate::dynamics::{
    BodyVelocity, ControlCommand, DynamicsError, Pose, SimState, Simulation, ThrusterCommand, VesselParams,
};

const CALIBRATION_LEVELS: usize = 20;
const CALIBRATION_DT: f64 = 0.1;
const CALIBRATION_STEPS: usize = 3000;

/// Turns a `(v, ω)` reference into thruster commands.
///
/// Surge uses a steady-state thrust-to-speed table measured on the vessel
/// model plus proportional correction; yaw rate uses feedforward plus PI.
#[derive(Debug, Clone)]
pub struct VelocityTracker {
    params: VesselParams,
    /// `(steady surge speed, thrust)` pairs, increasing in both.
    speed_table: Vec<(f64, f64)>,
    /// Steady yaw rate at full yaw effort and half thrust.
    yaw_rate_full: f64,
    pub k_speed: f64,
    pub ki_speed: f64,
    pub k_yaw: f64,
    pub ki_yaw: f64,
    speed_integral: f64,
    yaw_integral: f64,
}

fn steady_state(params: &VesselParams, cmd: ControlCommand) -> Result<BodyVelocity, DynamicsError> {
    let mut sim = Simulation::new(params.clone(), SimState::drifting(Pose::default()), CALIBRATION_DT)?;
    sim.set_command(cmd)?;
    sim.advance(CALIBRATION_STEPS)?;
    Ok(sim.state.nu_r)
}

impl VelocityTracker {
    pub fn calibrate(params: &VesselParams) -> Result<Self, DynamicsError> {
        let n = params.thrusters().len();
        let mut speed_table = vec![(0.0, 0.0)];
        for k in 1..=CALIBRATION_LEVELS {
            let thrust = k as f64 / CALIBRATION_LEVELS as f64;
            let u = steady_state(params, ControlCommand(vec![ThrusterCommand::new(thrust, 0.5); n]))?.u;
            if u > speed_table.last().map_or(0.0, |e| e.0) {
                speed_table.push((u, thrust));
            }
        }
        let mut tracker = Self {
            params: params.clone(),
            speed_table,
            yaw_rate_full: 1.0,
            k_speed: 0.5,
            ki_speed: 0.1,
            k_yaw: 1.0,
            ki_yaw: 0.5,
            speed_integral: 0.0,
            yaw_integral: 0.0,
        };
        let full = steady_state(params, tracker.allocate(0.5, 1.0))?.r;
        if full.abs() > 1e-6 {
            tracker.yaw_rate_full = full;
        }
        Ok(tracker)
    }

    /// Fastest steady surge speed reachable at full thrust.
    pub fn max_speed(&self) -> f64 {
        self.speed_table.last().map_or(0.0, |e| e.0)
    }

    pub fn yaw_rate_full(&self) -> f64 {
        self.yaw_rate_full
    }

    /// Interpolated steady-state thrust for surge speed `v`.
    pub fn thrust_for_speed(&self, v: f64) -> f64 {
        let t = &self.speed_table;
        if v <= 0.0 {
            return 0.0;
        }
        for w in t.windows(2) {
            let (u0, f0) = w[0];
            let (u1, f1) = w[1];
            if v <= u1 {
                return f0 + (f1 - f0) * (v - u0) / (u1 - u0);
            }
        }
        1.0
    }

    pub fn reset(&mut self) {
        self.speed_integral = 0.0;
        self.yaw_integral = 0.0;
    }

    /// Commands for one control period of length `dt`. Integrators only run while unsaturated.
    pub fn update(&mut self, v_ref: f64, omega_ref: f64, nu: &BodyVelocity, dt: f64) -> ControlCommand {
        let e_speed = v_ref - nu.u;
        let speed_candidate = self.speed_integral + e_speed * dt;
        let raw_thrust = self.thrust_for_speed(v_ref) + self.k_speed * e_speed + self.ki_speed * speed_candidate;
        if (0.0..=1.0).contains(&raw_thrust) {
            self.speed_integral = speed_candidate;
        }
        let thrust = raw_thrust.clamp(0.0, 1.0);
        let scale = 1.0 / self.yaw_rate_full;
        let err = omega_ref - nu.r;
        let ff = omega_ref * scale * (0.5 / thrust.max(0.1));
        let candidate = self.yaw_integral + err * dt;
        let raw = ff + scale * (self.k_yaw * err + self.ki_yaw * candidate);
        if raw.abs() < 1.0 {
            self.yaw_integral = candidate;
        }
        self.allocate(thrust, raw.clamp(-1.0, 1.0))
    }

    /// Maps a common thrust and a yaw effort in `[-1, 1]` onto every thruster.
    /// Positive effort means a counter-clockwise yaw moment.
    pub fn allocate(&self, thrust: f64, effort: f64) -> ControlCommand {
        ControlCommand(
            self.params
                .thrusters()
                .iter()
                .map(|th| {
                    if th.is_steerable() {
                        let dir = th.d_x.signum();
                        ThrusterCommand::new(thrust, 0.5 + 0.5 * effort * dir)
                    } else {
                        let dir = -th.d_y.signum();
                        ThrusterCommand::new((thrust * (1.0 + effort * dir)).clamp(0.0, 1.0), 0.5)
                    }
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{thruster_allocation, DEFAULT_DT};

    #[test]
    fn speed_table_is_monotone_and_invertible() {
        let p = VesselParams::example_ferry();
        let t = VelocityTracker::calibrate(&p).unwrap();
        assert!(t.speed_table.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1));
        // Surge-only steady state solves (d + q·u)·u = F for this hull.
        let (d, q, f): (f64, f64, f64) = (50.0, 40.0, 250.0);
        let u_star = (-d + (d * d + 4.0 * q * f).sqrt()) / (2.0 * q);
        assert!((t.thrust_for_speed(u_star) - 0.5).abs() < 0.01);
        assert_eq!(t.thrust_for_speed(10.0), 1.0);
        assert_eq!(t.thrust_for_speed(-1.0), 0.0);
    }

    #[test]
    fn positive_effort_turns_left() {
        let p = VesselParams::example_ferry();
        let t = VelocityTracker::calibrate(&p).unwrap();
        let tau = thruster_allocation(&t.allocate(0.5, 1.0), &p).unwrap();
        assert!(tau.yaw > 0.0);
        assert!(t.yaw_rate_full() > 0.0);
    }

    #[test]
    fn tracks_speed_and_turn_rate() {
        let p = VesselParams::example_ferry();
        let mut t = VelocityTracker::calibrate(&p).unwrap();
        let mut sim = Simulation::new(p, SimState::drifting(Pose::default()), DEFAULT_DT).unwrap();
        for _ in 0..600 {
            let cmd = t.update(1.2, 0.1, &sim.state.nu_r, 0.1);
            sim.set_command(cmd).unwrap();
            sim.advance(5).unwrap();
        }
        assert!((sim.state.nu_r.u - 1.2).abs() < 0.15, "{:?}", sim.state.nu_r);
        assert!((sim.state.nu_r.r - 0.1).abs() < 0.02, "{:?}", sim.state.nu_r);
    }
}
