use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{Banner, ErrorCode, Mode, Request, RpcError, PROTOCOL_NAME, PROTOCOL_VERSION};
use crate::dynamics::{BodyVelocity, ControlCommand, CurrentSpec, Pose, ThrusterCommand, VesselParams, WindForce};
use crate::geometry::Point;
use crate::radar::{rasterize, write_pgm, ExtentMode, RadarConfig, RadarMetadata};
use crate::rl::{Action, EnvConfig, Environment, EpisodeStats, Outcome, ANGLE_RANGE, THRUST_RANGE};
use crate::world::{raycast_scan, ChannelLayout, ObstacleWorld, PcgParams};

/// Beams used to sample the scene for `get_radar`.
const RADAR_SCAN_BEAMS: usize = 720;

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub params: VesselParams,
    pub world: ObstacleWorld,
    pub env: EnvConfig,
    pub radar: RadarConfig,
    pub mode: Mode,
}

impl SessionConfig {
    pub fn new(params: VesselParams, world: ObstacleWorld) -> Self {
        Self { params, world, env: EnvConfig::default(), radar: RadarConfig::default(), mode: Mode::Lockstep }
    }
}

/// Immutable view published after every mutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub pose: Pose,
    pub nu: BodyVelocity,
    pub nu_r: BodyVelocity,
    pub ground_speed: f64,
    pub command: ControlCommand,
}

/// The single simulation authority behind the service.
#[derive(Debug, Clone)]
pub struct Session {
    env: Environment,
    radar: RadarConfig,
    mode: Mode,
    episodes: Vec<EpisodeStats>,
    successes: usize,
}

fn parse<T: DeserializeOwned>(params: &Value) -> Result<T, RpcError> {
    let v = if params.is_null() { json!({}) } else { params.clone() };
    serde_json::from_value(v).map_err(|e| RpcError::new(ErrorCode::InvalidParams, e.to_string()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

fn sim_err(e: impl std::fmt::Display) -> RpcError {
    RpcError::new(ErrorCode::SimulationError, e.to_string())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Controls {
    thrust: f64,
    #[serde(default = "straight")]
    angle: f64,
}

fn straight() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurrentParams {
    speed: f64,
    heading: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WindParams {
    #[serde(default)]
    surge: f64,
    #[serde(default)]
    sway: f64,
    #[serde(default)]
    yaw: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedParams {
    #[serde(default)]
    seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepParams {
    #[serde(default = "one")]
    n: usize,
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanParams {
    n_beams: Option<usize>,
    max_range: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RadarParams {
    image_size: Option<usize>,
    max_range: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PcgRequest {
    #[serde(default)]
    pcg: PcgParams,
    #[serde(default)]
    load: bool,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, RpcError> {
        config.radar.validate().map_err(|e| RpcError::new(ErrorCode::InvalidParams, e.to_string()))?;
        let env = Environment::new(config.params, config.world, config.env).map_err(sim_err)?;
        Ok(Self { env, radar: config.radar, mode: config.mode, episodes: Vec::new(), successes: 0 })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }

    pub fn banner(&self) -> Banner {
        let cfg = self.env.config();
        Banner {
            protocol: PROTOCOL_NAME.to_string(),
            version: PROTOCOL_VERSION,
            mode: self.mode,
            dt: cfg.dt,
            n_beams: cfg.n_beams,
            observation_len: cfg.observation_len(),
            action_low: [THRUST_RANGE[0], ANGLE_RANGE[0]],
            action_high: [THRUST_RANGE[1], ANGLE_RANGE[1]],
        }
    }

    pub fn snapshot(&self) -> Snapshot {
        let sim = self.env.simulation();
        Snapshot {
            t: sim.state.t,
            pose: sim.state.pose,
            nu: sim.absolute_velocity(),
            nu_r: sim.state.nu_r,
            ground_speed: sim.state.ground_speed(&sim.current),
            command: sim.command().clone(),
        }
    }

    /// Advances the free-running simulation by `n` fixed steps.
    pub fn advance(&mut self, n: usize) -> Result<(), RpcError> {
        self.env.simulation_mut().advance(n).map_err(sim_err)
    }

    fn require_lockstep(&self, method: &str) -> Result<(), RpcError> {
        match self.mode {
            Mode::Lockstep => Ok(()),
            Mode::Realtime => Err(RpcError::new(ErrorCode::ModeError, format!("{method} requires lockstep mode"))),
        }
    }

    pub fn handle(&mut self, req: &Request) -> Result<Value, RpcError> {
        let p = &req.params;
        match req.method.as_str() {
            "get_info" => Ok(to_value(&self.banner())),
            "get_state" => Ok(to_value(&self.snapshot())),
            "get_scan" => {
                let a: ScanParams = parse(p)?;
                let cfg = self.env.config();
                let n = a.n_beams.unwrap_or(cfg.n_beams);
                let range = a.max_range.unwrap_or(cfg.max_range);
                if n == 0 || !(range > 0.0 && range.is_finite()) {
                    return Err(RpcError::new(ErrorCode::InvalidParams, "need n_beams >= 1 and max_range > 0"));
                }
                let scan = raycast_scan(self.env.world(), &self.env.pose(), n, range)
                    .with_timestamp(self.env.simulation().state.t);
                Ok(to_value(&scan))
            }
            "get_radar" => {
                let a: RadarParams = parse(p)?;
                let mut cfg = RadarConfig { extent_mode: ExtentMode::FixedMetric, ..self.radar };
                if let Some(s) = a.image_size {
                    cfg.image_size = s;
                }
                if let Some(r) = a.max_range {
                    cfg.max_range = r;
                }
                cfg.validate().map_err(|e| RpcError::new(ErrorCode::InvalidParams, e.to_string()))?;
                let pose = self.env.pose();
                let scan = raycast_scan(self.env.world(), &pose, RADAR_SCAN_BEAMS, cfg.max_range);
                let hits: Vec<Point> = scan.points().collect();
                let mut frame = rasterize(&hits, Point::new(pose.x, pose.y), &cfg).map_err(sim_err)?;
                frame.timestamp = self.env.simulation().state.t;
                let mut pgm = Vec::new();
                write_pgm(&frame, &mut pgm).map_err(sim_err)?;
                Ok(json!({
                    "format": "pgm",
                    "encoding": "base64",
                    "data": base64::engine::general_purpose::STANDARD.encode(&pgm),
                    "metadata": to_value(&RadarMetadata::new(&frame, &cfg)),
                }))
            }
            "set_vessel_controls" => {
                let c: Controls = parse(p)?;
                if !(c.thrust.is_finite() && c.angle.is_finite()) {
                    return Err(RpcError::new(ErrorCode::InvalidParams, "thrust and angle must be finite"));
                }
                let cmd = ThrusterCommand::new(c.thrust, c.angle);
                let sim = self.env.simulation_mut();
                let n = sim.params.thrusters().len();
                sim.set_command(ControlCommand(vec![cmd; n])).map_err(sim_err)?;
                Ok(json!({ "thrust": cmd.thrust, "angle": cmd.angle }))
            }
            "set_current" => {
                let c: CurrentParams = parse(p)?;
                let spec = CurrentSpec::new(c.speed, c.heading)
                    .map_err(|e| RpcError::new(ErrorCode::InvalidParams, e.to_string()))?;
                self.env.set_current(spec);
                Ok(to_value(&spec))
            }
            "set_wind" => {
                let w: WindParams = parse(p)?;
                if ![w.surge, w.sway, w.yaw].iter().all(|v| v.is_finite()) {
                    return Err(RpcError::new(ErrorCode::InvalidParams, "wind must be finite"));
                }
                let wind = WindForce::new(w.surge, w.sway, w.yaw);
                self.env.set_wind(wind);
                Ok(to_value(&wind))
            }
            "sim_step" => {
                self.require_lockstep("sim_step")?;
                let s: StepParams = parse(p)?;
                self.advance(s.n)?;
                Ok(json!({ "t": self.env.simulation().state.t }))
            }
            "env_reset" => {
                self.require_lockstep("env_reset")?;
                let s: SeedParams = parse(p)?;
                let obs = self.env.reset(s.seed).map_err(sim_err)?;
                Ok(json!({ "observation": to_value(&obs), "vector": obs.to_vec() }))
            }
            "env_step" => {
                self.require_lockstep("env_step")?;
                let a: Action = parse(p)?;
                let r = self.env.step(a).map_err(|e| RpcError::new(ErrorCode::EpisodeError, e.to_string()))?;
                if let Some(outcome) = r.info.outcome {
                    if outcome == Outcome::Goal {
                        self.successes += 1;
                    }
                    let k = self.episodes.len();
                    self.episodes.push(EpisodeStats {
                        episode_index: k,
                        steps: self.env.steps(),
                        outcome,
                        cumulative_reward: self.env.cumulative_reward(),
                        success_rate_running: self.successes as f64 / (k + 1) as f64,
                    });
                }
                Ok(json!({
                    "observation": to_value(&r.observation),
                    "vector": r.observation.to_vec(),
                    "reward": r.reward,
                    "done": r.done,
                    "info": to_value(&r.info),
                }))
            }
            "get_episode_stats" => Ok(to_value(&self.episodes)),
            "pcg_generate" => {
                let r: PcgRequest = parse(p)?;
                let layout =
                    ChannelLayout::generate(&r.pcg).map_err(|e| RpcError::new(ErrorCode::InvalidParams, e.to_string()))?;
                if r.load {
                    let mut world = layout.to_world();
                    world.current = self.env.world().current;
                    world.wind = self.env.world().wind;
                    self.env.set_world(world);
                }
                let mut v = to_value(&layout);
                v["n_sections"] = json!(layout.n_sections());
                v["loaded"] = json!(r.load);
                Ok(v)
            }
            other => Err(RpcError::new(ErrorCode::UnknownMethod, format!("unknown method `{other}`"))),
        }
    }
}
