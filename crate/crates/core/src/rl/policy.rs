use super::{Action, Observation, ANGLE_RANGE};
use crate::angle::angle_diff;
use crate::dynamics::{Pose, VesselParams};
use crate::geometry::Point;
use crate::prng::SeededRng;

/// Ground truth handed to scripted policies alongside the observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyContext {
    pub pose: Pose,
    pub goal: Point,
    pub step: usize,
}

pub trait Policy {
    fn act(&mut self, obs: &Observation, ctx: &PolicyContext) -> Action;

    /// Called at the start of every episode.
    fn reset(&mut self, _seed: u64) {}
}

/// Uniform random actions over the action box.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: SeededRng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self { rng: SeededRng::new(seed) }
    }
}

impl Policy for RandomPolicy {
    fn act(&mut self, _obs: &Observation, _ctx: &PolicyContext) -> Action {
        let thrust = self.rng.next_f64();
        let angle = self.rng.uniform(ANGLE_RANGE[0], ANGLE_RANGE[1]);
        Action::new(thrust, angle)
    }

    fn reset(&mut self, seed: u64) {
        self.rng = SeededRng::new(seed);
    }
}

/// Fixed cruise thrust with steering proportional to the heading error toward the goal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoalSeekingPolicy {
    pub cruise_thrust: f64,
    /// Normalized angle change per radian of heading error.
    pub gain: f64,
    /// +1 when a larger normalized angle turns the vessel counter-clockwise, −1 otherwise.
    pub steer_sign: f64,
}

impl GoalSeekingPolicy {
    /// Picks the steering sign from the first thruster's position (stern thrusters steer inverted).
    pub fn for_vessel(params: &VesselParams) -> Self {
        let steer_sign = params.thrusters().first().map_or(1.0, |t| if t.d_x < 0.0 { -1.0 } else { 1.0 });
        Self { cruise_thrust: 0.6, gain: 0.5, steer_sign }
    }
}

impl Policy for GoalSeekingPolicy {
    fn act(&mut self, _obs: &Observation, ctx: &PolicyContext) -> Action {
        let err = angle_diff(ctx.pose.bearing_to(ctx.goal.x, ctx.goal.y), ctx.pose.psi);
        let angle = (0.5 + self.steer_sign * self.gain * err).clamp(ANGLE_RANGE[0], ANGLE_RANGE[1]);
        Action::new(self.cruise_thrust, angle)
    }
}
