//! Episodic goal-reaching environment with static obstacles.
//!
//! One environment step holds the action for one second of simulated time.
//! The observation vector is
//! `[d_goal, ψ, u, v, r, u̇, v̇, ṙ, thrust_prev, angle_prev, d_obstacles…]`.

mod log;
mod policy;

pub use log::{observation_digest, EpisodeLog};
pub use policy::{GoalSeekingPolicy, Policy, PolicyContext, RandomPolicy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::angle_diff;
use crate::dynamics::{
    BodyVelocity, ControlCommand, CurrentSpec, DynamicsError, Pose, SimState, Simulation, ThrusterCommand, VesselParams,
    WindForce, DEFAULT_DT,
};
use crate::geometry::Point;
use crate::world::{collision_check, raycast_scan, ObstacleWorld, WorldDoc, WorldError};

pub const RL_FIXED_WORLD: &str = include_str!("../../worlds/rl-fixed.toml");
pub const RL_OPEN_WORLD: &str = include_str!("../../worlds/rl-open.toml");

/// Bundled scenario with obstacles flanking the direct route.
pub fn fixed_world() -> ObstacleWorld {
    WorldDoc::parse(RL_FIXED_WORLD).and_then(WorldDoc::into_world).expect("bundled world is valid")
}

/// Bundled obstacle-free scenario.
pub fn open_world() -> ObstacleWorld {
    WorldDoc::parse(RL_OPEN_WORLD).and_then(WorldDoc::into_world).expect("bundled world is valid")
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("episode finished; call reset first")]
    EpisodeFinished,
    #[error("no active episode; call reset first")]
    NotReset,
    #[error("non-finite action ({thrust}, {angle})")]
    NonFiniteAction { thrust: f64, angle: f64 },
    #[error("invalid environment configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    World(#[from] WorldError),
}

pub const THRUST_RANGE: [f64; 2] = [0.0, 1.0];
pub const ANGLE_RANGE: [f64; 2] = [0.4, 0.6];

/// Normalized thrust and thruster angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub thrust: f64,
    pub angle: f64,
}

impl Action {
    pub const NEUTRAL: Self = Self { thrust: 0.0, angle: 0.5 };

    pub fn new(thrust: f64, angle: f64) -> Self {
        Self { thrust, angle }
    }

    pub fn is_finite(&self) -> bool {
        self.thrust.is_finite() && self.angle.is_finite()
    }

    /// Clamps into the action box; the flag reports whether anything changed.
    pub fn clamped(&self) -> (Self, bool) {
        let c = Self {
            thrust: self.thrust.clamp(THRUST_RANGE[0], THRUST_RANGE[1]),
            angle: self.angle.clamp(ANGLE_RANGE[0], ANGLE_RANGE[1]),
        };
        (c, c != *self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub terminal_bonus: f64,
    pub terminal_penalty: f64,
    pub goal_radius: f64,
    pub max_steps: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            g1: 0.01,
            g2: 1.0,
            g3: 0.1,
            terminal_bonus: 500.0,
            terminal_penalty: -500.0,
            goal_radius: 5.0,
            max_steps: 300,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub reward: RewardConfig,
    pub n_beams: usize,
    pub max_range: f64,
    pub footprint_radius: f64,
    pub dt: f64,
    /// Simulated seconds per environment step.
    pub step_time: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            reward: RewardConfig::default(),
            n_beams: 36,
            max_range: 50.0,
            footprint_radius: 2.5,
            dt: DEFAULT_DT,
            step_time: 1.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::InvalidConfig(m.to_string()));
        let r = &self.reward;
        if !(r.goal_radius > 0.0) || r.max_steps < 1 {
            return bad("need goal_radius > 0 and max_steps >= 1");
        }
        if ![r.g1, r.g2, r.g3, r.terminal_bonus, r.terminal_penalty].iter().all(|v| v.is_finite()) {
            return bad("reward weights must be finite");
        }
        if self.n_beams == 0 || !(self.max_range > 0.0) || !(self.footprint_radius >= 0.0) {
            return bad("need n_beams >= 1, max_range > 0, footprint_radius >= 0");
        }
        if !(self.dt > 0.0 && self.step_time >= self.dt && self.step_time.is_finite()) {
            return bad("need step_time >= dt > 0");
        }
        Ok(())
    }

    pub fn observation_len(&self) -> usize {
        10 + self.n_beams
    }

    pub fn substeps(&self) -> usize {
        (self.step_time / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Goal,
    Collision,
    Timeout,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Goal => "goal",
            Outcome::Collision => "collision",
            Outcome::Timeout => "timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub d_goal: f64,
    pub theta: f64,
    pub nu: BodyVelocity,
    pub nu_dot: BodyVelocity,
    pub a_prev: Action,
    pub d_obstacles: Vec<f64>,
}

impl Observation {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![
            self.d_goal,
            self.theta,
            self.nu.u,
            self.nu.v,
            self.nu.r,
            self.nu_dot.u,
            self.nu_dot.v,
            self.nu_dot.r,
            self.a_prev.thrust,
            self.a_prev.angle,
        ];
        v.extend_from_slice(&self.d_obstacles);
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardTerms {
    pub distance: f64,
    pub direction: f64,
    pub heading: f64,
    pub end: f64,
    pub total: f64,
}

/// Reward for the transition `prev → new` given the terminal outcome, if any.
pub fn compute_reward(
    prev: &Pose,
    new: &Pose,
    goal: Point,
    outcome: Option<Outcome>,
    config: &RewardConfig,
) -> RewardTerms {
    let d_prev = prev.distance_to(goal.x, goal.y);
    let d_now = new.distance_to(goal.x, goal.y);
    let distance = -d_now;
    let direction = d_prev - d_now;
    let heading = -angle_diff(new.bearing_to(goal.x, goal.y), new.psi).abs();
    let end = match outcome {
        Some(Outcome::Goal) => config.terminal_bonus,
        Some(Outcome::Collision | Outcome::Timeout) => config.terminal_penalty,
        None => 0.0,
    };
    let total = config.g1 * distance + config.g2 * direction + config.g3 * heading + end;
    RewardTerms { distance, direction, heading, end, total }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub step: usize,
    pub outcome: Option<Outcome>,
    pub terms: RewardTerms,
    /// The submitted action was outside the action box and got clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode_index: usize,
    pub steps: usize,
    pub outcome: Outcome,
    pub cumulative_reward: f64,
    pub success_rate_running: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Running,
    Done,
}

/// Single-caller episodic environment.
#[derive(Debug, Clone)]
pub struct Environment {
    world: ObstacleWorld,
    config: EnvConfig,
    sim: Simulation,
    a_prev: Action,
    steps: usize,
    phase: Phase,
    seed: u64,
    cumulative: f64,
}

impl Environment {
    pub fn new(params: VesselParams, world: ObstacleWorld, config: EnvConfig) -> Result<Self, RlError> {
        config.validate()?;
        if params.thrusters().is_empty() {
            return Err(RlError::InvalidConfig("vessel has no thrusters".into()));
        }
        let mut sim = Simulation::new(params, SimState::at_rest(world.spawn, &world.current), config.dt)?;
        sim.current = world.current;
        sim.wind = world.wind;
        Ok(Self { world, config, sim, a_prev: Action::NEUTRAL, steps: 0, phase: Phase::Idle, seed: 0, cumulative: 0.0 })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn world(&self) -> &ObstacleWorld {
        &self.world
    }

    pub fn simulation(&self) -> &Simulation {
        &self.sim
    }

    /// Direct access for free-running control outside episodes.
    pub fn simulation_mut(&mut self) -> &mut Simulation {
        &mut self.sim
    }

    pub fn set_current(&mut self, current: CurrentSpec) {
        self.world.current = current;
        self.sim.current = current;
    }

    pub fn set_wind(&mut self, wind: WindForce) {
        self.world.wind = wind;
        self.sim.wind = wind;
    }

    /// Replaces the scenario and puts the vessel at its spawn; any episode ends.
    pub fn set_world(&mut self, world: ObstacleWorld) {
        self.sim.current = world.current;
        self.sim.wind = world.wind;
        self.sim.state = SimState::at_rest(world.spawn, &world.current);
        self.world = world;
        self.phase = Phase::Idle;
    }

    pub fn pose(&self) -> Pose {
        self.sim.state.pose
    }

    pub fn goal(&self) -> Point {
        self.world.goal
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn cumulative_reward(&self) -> f64 {
        self.cumulative
    }

    pub fn context(&self) -> PolicyContext {
        PolicyContext { pose: self.pose(), goal: self.goal(), step: self.steps }
    }

    /// Places the vessel back at the spawn pose at rest over ground.
    ///
    /// The scenario is fixed, so the seed only labels the episode.
    pub fn reset(&mut self, seed: u64) -> Result<Observation, RlError> {
        self.sim.state = SimState::at_rest(self.world.spawn, &self.world.current);
        self.sim.set_command(ControlCommand::neutral(self.sim.params.thrusters().len()))?;
        self.a_prev = Action::NEUTRAL;
        self.steps = 0;
        self.phase = Phase::Running;
        self.seed = seed;
        self.cumulative = 0.0;
        Ok(self.observe())
    }

    pub fn observe(&self) -> Observation {
        let pose = self.sim.state.pose;
        let scan = raycast_scan(&self.world, &pose, self.config.n_beams, self.config.max_range);
        Observation {
            d_goal: pose.distance_to(self.world.goal.x, self.world.goal.y),
            theta: pose.psi,
            nu: self.sim.absolute_velocity(),
            nu_dot: self.sim.acceleration(),
            a_prev: self.a_prev,
            d_obstacles: scan.ranges,
        }
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult, RlError> {
        match self.phase {
            Phase::Idle => return Err(RlError::NotReset),
            Phase::Done => return Err(RlError::EpisodeFinished),
            Phase::Running => {}
        }
        if !action.is_finite() {
            return Err(RlError::NonFiniteAction { thrust: action.thrust, angle: action.angle });
        }
        let (action, clamped) = action.clamped();
        let n = self.sim.params.thrusters().len();
        self.sim.set_command(ControlCommand(vec![ThrusterCommand::new(action.thrust, action.angle); n]))?;

        let prev = self.sim.state.pose;
        let goal = self.world.goal;
        let mut outcome = None;
        for _ in 0..self.config.substeps() {
            self.sim.step()?;
            let pose = self.sim.state.pose;
            if collision_check(&self.world, &pose, self.config.footprint_radius) {
                outcome = Some(Outcome::Collision);
                break;
            }
            if pose.distance_to(goal.x, goal.y) <= self.config.reward.goal_radius {
                outcome = Some(Outcome::Goal);
                break;
            }
        }
        self.steps += 1;
        if outcome.is_none() && self.steps >= self.config.reward.max_steps {
            outcome = Some(Outcome::Timeout);
        }
        self.a_prev = action;
        let terms = compute_reward(&prev, &self.sim.state.pose, goal, outcome, &self.config.reward);
        self.cumulative += terms.total;
        let done = outcome.is_some();
        if done {
            self.phase = Phase::Done;
        }
        Ok(StepResult {
            observation: self.observe(),
            reward: terms.total,
            done,
            info: StepInfo { step: self.steps, outcome, terms, clamped },
        })
    }
}

/// Runs `n_episodes` episodes back to back with seeds `base_seed + k`.
///
/// A policy emitting a non-finite action ends its episode as a collision.
pub fn run_policy(
    env: &mut Environment,
    policy: &mut dyn Policy,
    n_episodes: usize,
    base_seed: u64,
    log: Option<&mut EpisodeLog>,
) -> Result<Vec<EpisodeStats>, RlError> {
    run_policy_with(env, policy, n_episodes, base_seed, log, &mut |_, _, _, _| {})
}

/// [`run_policy`] with a callback after every step: `(episode, env, action, result)`.
pub fn run_policy_with(
    env: &mut Environment,
    policy: &mut dyn Policy,
    n_episodes: usize,
    base_seed: u64,
    mut log: Option<&mut EpisodeLog>,
    on_step: &mut dyn FnMut(usize, &Environment, &Action, &StepResult),
) -> Result<Vec<EpisodeStats>, RlError> {
    let mut stats = Vec::with_capacity(n_episodes);
    let mut successes = 0usize;
    for k in 0..n_episodes {
        let seed = base_seed.wrapping_add(k as u64);
        let mut obs = env.reset(seed)?;
        policy.reset(seed);
        let outcome = loop {
            let action = policy.act(&obs, &env.context());
            let result = match env.step(action) {
                Ok(r) => r,
                Err(RlError::NonFiniteAction { thrust, angle }) => {
                    ::log::warn!("episode {k}: policy produced non-finite action ({thrust}, {angle}); aborting");
                    break Outcome::Collision;
                }
                Err(e) => return Err(e),
            };
            on_step(k, env, &action, &result);
            if let Some(log) = log.as_deref_mut() {
                log.record_step(k, &action, &result).map_err(|e| RlError::InvalidConfig(e.to_string()))?;
            }
            obs = result.observation;
            if let Some(o) = result.info.outcome {
                break o;
            }
        };
        if outcome == Outcome::Goal {
            successes += 1;
        }
        let s = EpisodeStats {
            episode_index: k,
            steps: env.steps(),
            outcome,
            cumulative_reward: env.cumulative_reward(),
            success_rate_running: successes as f64 / (k + 1) as f64,
        };
        if let Some(log) = log.as_deref_mut() {
            log.record_episode(&s).map_err(|e| RlError::InvalidConfig(e.to_string()))?;
        }
        stats.push(s);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(world: ObstacleWorld) -> Environment {
        Environment::new(VesselParams::example_ferry(), world, EnvConfig::default()).unwrap()
    }

    #[test]
    fn reset_is_deterministic_and_at_rest() {
        let mut e = env(fixed_world());
        let a = e.reset(3).unwrap();
        let b = e.reset(3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_vec().len(), 46);
        assert_eq!(a.d_goal, 150.0f64.hypot(40.0));
        assert_eq!(a.nu, BodyVelocity::ZERO);
        assert_eq!(a.nu_dot, BodyVelocity::ZERO);
        assert_eq!(a.a_prev, Action::NEUTRAL);
        assert!(a.d_obstacles.iter().all(|d| *d > 0.0 && *d <= 50.0));
    }

    #[test]
    fn step_requires_reset_and_stops_after_done() {
        let mut e = env(open_world());
        assert_eq!(e.step(Action::NEUTRAL).unwrap_err(), RlError::NotReset);
        let cfg = EnvConfig { reward: RewardConfig { max_steps: 2, ..Default::default() }, ..Default::default() };
        let mut e = Environment::new(VesselParams::example_ferry(), open_world(), cfg).unwrap();
        e.reset(0).unwrap();
        assert!(!e.step(Action::NEUTRAL).unwrap().done);
        let last = e.step(Action::NEUTRAL).unwrap();
        assert!(last.done);
        assert_eq!(last.info.outcome, Some(Outcome::Timeout));
        assert_eq!(last.info.terms.end, -500.0);
        assert_eq!(e.step(Action::NEUTRAL).unwrap_err(), RlError::EpisodeFinished);
    }

    #[test]
    fn actions_are_clamped() {
        let mut e = env(open_world());
        e.reset(0).unwrap();
        let r = e.step(Action::new(1.7, 0.1)).unwrap();
        assert!(r.info.clamped);
        assert_eq!(r.observation.a_prev, Action::new(1.0, 0.4));
        assert!(matches!(e.step(Action::new(f64::NAN, 0.5)), Err(RlError::NonFiniteAction { .. })));
    }

    #[test]
    fn reward_terms_match_recomputation() {
        let cfg = RewardConfig::default();
        let goal = Point::new(30.0, -12.0);
        let prev = Pose::new(1.0, 2.0, 0.3);
        let new = Pose::new(3.5, 1.0, -0.2);
        let t = compute_reward(&prev, &new, goal, None, &cfg);
        let d0 = ((30.0f64 - 1.0).powi(2) + (-12.0f64 - 2.0).powi(2)).sqrt();
        let d1 = ((30.0f64 - 3.5).powi(2) + (-12.0f64 - 1.0).powi(2)).sqrt();
        let bearing = (-13.0f64).atan2(26.5);
        let mut err = bearing + 0.2;
        while err > std::f64::consts::PI {
            err -= std::f64::consts::TAU;
        }
        assert!((t.distance + d1).abs() < 1e-12);
        assert!((t.direction - (d0 - d1)).abs() < 1e-12);
        assert!((t.heading + err.abs()).abs() < 1e-12);
        assert_eq!(t.end, 0.0);
        let total = 0.01 * -d1 + (d0 - d1) - 0.1 * err.abs();
        assert!((t.total - total).abs() < 1e-12);

        let g = compute_reward(&prev, &new, goal, Some(Outcome::Goal), &cfg);
        assert_eq!(g.end, 500.0);
        let c = compute_reward(&prev, &prev, goal, Some(Outcome::Collision), &cfg);
        assert_eq!(c.end, -500.0);
        assert_eq!(c.direction, 0.0);
    }

    #[test]
    fn facing_goal_has_zero_heading_penalty() {
        let p = Pose::new(0.0, 0.0, 0.25);
        let goal = Point::new(5.0 * 0.25f64.cos(), 5.0 * 0.25f64.sin());
        let t = compute_reward(&p, &p, goal, None, &RewardConfig::default());
        assert!(t.heading.abs() < 1e-15);
    }

    #[test]
    fn scripted_policy_reaches_open_goal() {
        let mut e = env(open_world());
        let mut p = GoalSeekingPolicy::for_vessel(&VesselParams::example_ferry());
        let stats = run_policy(&mut e, &mut p, 1, 0, None).unwrap();
        assert_eq!(stats[0].outcome, Outcome::Goal, "{stats:?}");
        assert!(run_policy(&mut e, &mut p, 0, 0, None).unwrap().is_empty());
    }

    #[test]
    fn non_finite_policy_is_a_failure() {
        struct Broken;
        impl Policy for Broken {
            fn act(&mut self, _: &Observation, _: &PolicyContext) -> Action {
                Action::new(f64::NAN, 0.5)
            }
        }
        let mut e = env(open_world());
        let stats = run_policy(&mut e, &mut Broken, 2, 0, None).unwrap();
        assert!(stats.iter().all(|s| s.outcome == Outcome::Collision && s.steps == 0));
    }
}
