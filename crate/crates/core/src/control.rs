//! Speed-hold PID controller and the demo loop that drives it.

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlCommand, DynamicsError, Pose, SimState, Simulation, ThrusterCommand, VesselParams};

/// Positional PID with derivative on measurement and integral clamping.
#[derive(Debug, Clone, PartialEq)]
pub struct Pid {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub setpoint: f64,
    pub output_limits: (f64, f64),
    integral: f64,
    last_input: Option<f64>,
}

impl Pid {
    pub fn new(kp: f64, ki: f64, kd: f64, setpoint: f64) -> Self {
        Self { kp, ki, kd, setpoint, output_limits: (0.0, 1.0), integral: 0.0, last_input: None }
    }

    pub fn with_limits(mut self, lo: f64, hi: f64) -> Self {
        self.output_limits = (lo, hi);
        self
    }

    pub fn reset(&mut self) {
        self.integral = 0.0;
        self.last_input = None;
    }

    pub fn update(&mut self, input: f64, dt: f64) -> f64 {
        let (lo, hi) = self.output_limits;
        let error = self.setpoint - input;
        self.integral = (self.integral + self.ki * error * dt).clamp(lo, hi);
        let d_input = self.last_input.map_or(0.0, |last| input - last);
        self.last_input = Some(input);
        let derivative = if dt > 0.0 { -self.kd * d_input / dt } else { 0.0 };
        (self.kp * error + self.integral + derivative).clamp(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidDemoConfig {
    pub gains: [f64; 3],
    pub target_speed: f64,
    /// Controller period in seconds.
    pub period: f64,
    pub duration: f64,
    pub dt: f64,
}

impl Default for PidDemoConfig {
    fn default() -> Self {
        Self { gains: [1.5, 1.0, 0.2], target_speed: 0.51, period: 0.1, duration: 120.0, dt: crate::dynamics::DEFAULT_DT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidSample {
    pub t: f64,
    pub speed: f64,
    pub thrust: f64,
}

/// Holds ground speed at the target with a straight thruster; one sample per controller tick.
pub fn run_pid_demo(params: &VesselParams, config: &PidDemoConfig) -> Result<Vec<PidSample>, DynamicsError> {
    let mut sim = Simulation::new(params.clone(), SimState::drifting(Pose::default()), config.dt)?;
    let [kp, ki, kd] = config.gains;
    let mut pid = Pid::new(kp, ki, kd, config.target_speed);
    let substeps = ((config.period / config.dt).round() as usize).max(1);
    let ticks = (config.duration / config.period).round() as usize;
    let n = params.thrusters().len();
    let mut out = Vec::with_capacity(ticks);
    for _ in 0..ticks {
        let speed = sim.state.ground_speed(&sim.current);
        let thrust = pid.update(speed, config.period);
        out.push(PidSample { t: sim.state.t, speed, thrust });
        sim.set_command(ControlCommand(vec![ThrusterCommand::new(thrust, 0.5); n]))?;
        sim.advance(substeps)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proportional_only() {
        let mut pid = Pid::new(2.0, 0.0, 0.0, 1.0).with_limits(-10.0, 10.0);
        assert_eq!(pid.update(0.25, 0.1), 1.5);
    }

    #[test]
    fn output_and_integral_saturate() {
        let mut pid = Pid::new(0.0, 1.0, 0.0, 100.0);
        for _ in 0..1000 {
            assert!(pid.update(0.0, 1.0) <= 1.0);
        }
        // A wound-up integrator would need many ticks to unwind; a clamped one responds at once.
        pid.setpoint = 0.0;
        let out = pid.update(50.0, 1.0);
        assert_eq!(out, 0.0);
    }

    #[test]
    fn derivative_on_measurement() {
        let mut pid = Pid::new(0.0, 0.0, 1.0, 0.0).with_limits(-10.0, 10.0);
        assert_eq!(pid.update(1.0, 0.5), 0.0);
        assert_eq!(pid.update(2.0, 0.5), -2.0);
    }

    #[test]
    fn demo_settles_at_target() {
        let samples = run_pid_demo(&VesselParams::example_ferry(), &PidDemoConfig::default()).unwrap();
        let tail = &samples[samples.len() - 100..];
        for s in tail {
            assert!((s.speed - 0.51).abs() <= 0.05 * 0.51, "{s:?}");
        }
    }

    #[test]
    fn zero_gains_and_zero_target() {
        let cfg = PidDemoConfig { gains: [0.0; 3], duration: 10.0, ..Default::default() };
        let s = run_pid_demo(&VesselParams::example_ferry(), &cfg).unwrap();
        assert!(s.iter().all(|x| x.thrust == 0.0 && x.speed < 1e-12));
        let cfg = PidDemoConfig { target_speed: 0.0, duration: 30.0, ..Default::default() };
        let s = run_pid_demo(&VesselParams::example_ferry(), &cfg).unwrap();
        assert!(s.last().unwrap().thrust.abs() < 1e-9);
    }
}
