//! Scenario documents (TOML): vessel, world, environment schedule, one
//! controller, duration and output names.
//!
//! ```toml
//! name = "straight"
//! duration = 60.0
//!
//! [vessel]
//! builtin = "example-ferry"      # or: path = "models/my-boat.toml"
//!
//! [[current]]                    # piecewise constant, starting at t
//! t = 0.0
//! speed = 0.25
//! heading = 2.356194490192345
//!
//! [controller]
//! kind = "open-loop"
//! script = [{ t = 0.0, thrust = 0.5, angle = 0.5 }]
//! ```

mod run;

pub use run::{run_scenario, RunSummary, ScenarioRun, TrajectoryRow};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dwa::TransitConfig;
use crate::dynamics::{load_model, DynamicsError, VesselParams, EXAMPLE_FERRY};
use crate::rl::{EnvConfig, RlError};
use crate::world::{ChannelLayout, MooredVessel, ObstacleWorld, PcgParams, WorldDoc, WorldError};

/// Scenarios shipped with the library, addressable as `builtin:<name>`.
pub const BUILTIN_SCENARIOS: &[(&str, &str)] = &[
    ("straight", include_str!("../../scenarios/straight.toml")),
    ("current-sweep", include_str!("../../scenarios/current-sweep.toml")),
    ("pid-speed", include_str!("../../scenarios/pid-speed.toml")),
    ("channel-dwa", include_str!("../../scenarios/channel-dwa.toml")),
    ("rl-fixed", include_str!("../../scenarios/rl-fixed.toml")),
    ("rl-open", include_str!("../../scenarios/rl-open.toml")),
];

/// Worlds shipped with the library, addressable as `builtin:<name>`.
pub const BUILTIN_WORLDS: &[(&str, &str)] = &[("rl-fixed", crate::rl::RL_FIXED_WORLD), ("rl-open", crate::rl::RL_OPEN_WORLD)];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(String),
    #[error("cannot resolve {kind} reference `{reference}`: {reason}")]
    MissingReference { kind: &'static str, reference: String, reason: String },
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Rl(#[from] RlError),
}

impl ScenarioError {
    fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Self::Invalid { field: field.to_string(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VesselRef {
    pub builtin: Option<String>,
    pub path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorldRef {
    /// File path relative to the scenario, or `builtin:<name>`.
    Path(String),
    Inline(WorldDoc),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentEntry {
    #[serde(default)]
    pub t: f64,
    pub speed: f64,
    /// Earth-frame direction the current flows toward, radians.
    pub heading: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindEntry {
    #[serde(default)]
    pub t: f64,
    /// Body-frame `[surge N, sway N, yaw N·m]`.
    pub force: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEntry {
    pub t: f64,
    pub thrust: f64,
    #[serde(default = "half")]
    pub angle: f64,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    GoalSeeking,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Controller {
    OpenLoop {
        script: Vec<ScriptEntry>,
    },
    Pid {
        #[serde(default = "default_target")]
        target_speed: f64,
        #[serde(default = "default_gains")]
        gains: [f64; 3],
        #[serde(default = "default_period")]
        period: f64,
    },
    Dwa {
        #[serde(default)]
        transit: TransitConfig,
    },
    RlPolicy {
        policy: PolicyKind,
        #[serde(default = "one")]
        episodes: usize,
        #[serde(default)]
        env: EnvConfig,
    },
}

fn default_target() -> f64 {
    0.51
}

fn default_gains() -> [f64; 3] {
    [1.5, 1.0, 0.2]
}

fn default_period() -> f64 {
    0.1
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    /// Zero velocity over ground (the vessel starts drifting with any current).
    #[default]
    Rest,
    /// Zero velocity relative to the water.
    Drifting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Outputs {
    pub trajectory: String,
    pub summary: String,
    /// Trajectory sampling period for open-loop and PID runs.
    pub sample_period: f64,
    /// Per-plan candidate dump (DWA only).
    pub candidates: Option<String>,
    /// Per-step and per-episode logs (RL only): `<stem>_steps.csv`, `<stem>_episodes.csv`.
    pub episodes: Option<String>,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            trajectory: "trajectory.csv".into(),
            summary: "summary.json".into(),
            sample_period: 0.1,
            candidates: None,
            episodes: None,
        }
    }
}

/// Repeats the run once per current speed, keeping each entry's heading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub current_speed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    pub duration: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub start: Start,
    pub vessel: VesselRef,
    #[serde(default)]
    pub world: Option<WorldRef>,
    #[serde(default)]
    pub pcg: Option<PcgParams>,
    #[serde(default)]
    pub moored: Vec<MooredVessel>,
    #[serde(default)]
    pub current: Vec<CurrentEntry>,
    #[serde(default)]
    pub wind: Vec<WindEntry>,
    pub controller: Controller,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub sweep: Option<Sweep>,
}

impl ScenarioDoc {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }
}

/// A scenario with every reference resolved and validated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub params: VesselParams,
    pub world: ObstacleWorld,
    pub layout: Option<ChannelLayout>,
    pub dt: f64,
}

fn read_ref(kind: &'static str, reference: &str, base: &Path) -> Result<String, ScenarioError> {
    let path = base.join(reference);
    std::fs::read_to_string(&path).map_err(|e| ScenarioError::MissingReference {
        kind,
        reference: reference.to_string(),
        reason: format!("{}: {e}", path.display()),
    })
}

fn check_schedule(field: &str, times: impl Iterator<Item = f64>) -> Result<(), ScenarioError> {
    let mut last = f64::NEG_INFINITY;
    for t in times {
        if !t.is_finite() || t < 0.0 || t < last {
            return Err(ScenarioError::invalid(field, "times must be finite, >= 0 and non-decreasing"));
        }
        last = t;
    }
    Ok(())
}

impl Scenario {
    /// Loads `path`, or a bundled scenario when given `builtin:<name>`.
    pub fn load(path: &str) -> Result<Self, ScenarioError> {
        if let Some(name) = path.strip_prefix("builtin:") {
            let text = BUILTIN_SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
                ScenarioError::MissingReference {
                    kind: "scenario",
                    reference: path.to_string(),
                    reason: format!(
                        "known: {}",
                        BUILTIN_SCENARIOS.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
                    ),
                }
            })?;
            return Self::from_str(text, Path::new("."));
        }
        let text = read_ref("scenario", path, Path::new("."))?;
        let base = Path::new(path).parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Self::from_str(&text, &base)
    }

    /// Parses and resolves a document; relative references are taken from `base`.
    pub fn from_str(text: &str, base: &Path) -> Result<Self, ScenarioError> {
        Self::resolve(ScenarioDoc::parse(text)?, base)
    }

    pub fn resolve(doc: ScenarioDoc, base: &Path) -> Result<Self, ScenarioError> {
        let params = match (&doc.vessel.builtin, &doc.vessel.path) {
            (Some(name), None) => match name.as_str() {
                "example-ferry" => load_model(EXAMPLE_FERRY)?,
                other => {
                    return Err(ScenarioError::MissingReference {
                        kind: "vessel",
                        reference: other.to_string(),
                        reason: "known builtin vessels: example-ferry".into(),
                    })
                }
            },
            (None, Some(path)) => load_model(&read_ref("vessel", path, base)?)?,
            (None, None) => {
                return Err(ScenarioError::MissingReference {
                    kind: "vessel",
                    reference: String::new(),
                    reason: "set vessel.builtin or vessel.path".into(),
                })
            }
            (Some(_), Some(_)) => return Err(ScenarioError::invalid("vessel", "set only one of builtin/path")),
        };

        if !(doc.duration > 0.0 && doc.duration.is_finite()) {
            return Err(ScenarioError::invalid("duration", "must be > 0"));
        }
        let dt = doc.dt.unwrap_or(crate::dynamics::DEFAULT_DT);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ScenarioError::invalid("dt", "must be > 0"));
        }
        check_schedule("current", doc.current.iter().map(|c| c.t))?;
        check_schedule("wind", doc.wind.iter().map(|w| w.t))?;
        for c in &doc.current {
            crate::dynamics::CurrentSpec::new(c.speed, c.heading)
                .map_err(|e| ScenarioError::invalid("current", e.to_string()))?;
        }
        if doc.wind.iter().any(|w| !w.force.iter().all(|f| f.is_finite())) {
            return Err(ScenarioError::invalid("wind", "forces must be finite"));
        }
        if let Controller::OpenLoop { script } = &doc.controller {
            check_schedule("controller.script", script.iter().map(|s| s.t))?;
        }
        if let Some(s) = &doc.sweep {
            if s.current_speed.is_empty() || s.current_speed.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(ScenarioError::invalid("sweep.current_speed", "need one or more speeds >= 0"));
            }
            if doc.current.is_empty() {
                return Err(ScenarioError::invalid("sweep", "needs at least one [[current]] entry for the heading"));
            }
        }

        let (world, layout) = match (&doc.world, &doc.pcg) {
            (Some(_), Some(_)) => return Err(ScenarioError::invalid("world", "set only one of world/pcg")),
            (None, Some(pcg)) => {
                let layout = ChannelLayout::generate(pcg)?;
                (layout.to_world_with_moorings(&doc.moored)?, Some(layout))
            }
            (Some(w), None) => {
                if !doc.moored.is_empty() {
                    return Err(ScenarioError::invalid("moored", "moored vessels need a [pcg] channel"));
                }
                let world_doc = match w {
                    WorldRef::Inline(d) => d.clone(),
                    WorldRef::Path(p) => {
                        let text = match p.strip_prefix("builtin:") {
                            Some(name) => BUILTIN_WORLDS
                                .iter()
                                .find(|(n, _)| *n == name)
                                .map(|(_, t)| t.to_string())
                                .ok_or_else(|| ScenarioError::MissingReference {
                                    kind: "world",
                                    reference: p.clone(),
                                    reason: "unknown builtin world".into(),
                                })?,
                            None => read_ref("world", p, base)?,
                        };
                        WorldDoc::parse(&text)?
                    }
                };
                (world_doc.into_world()?, None)
            }
            (None, None) => {
                if matches!(doc.controller, Controller::Dwa { .. } | Controller::RlPolicy { .. }) {
                    return Err(ScenarioError::invalid("world", "dwa and rl-policy controllers need a world or pcg"));
                }
                (ObstacleWorld::open_water(Default::default(), Default::default()), None)
            }
        };
        Ok(Self { doc, params, world, layout, dt })
    }

    /// Applies a seed override: the channel is regenerated and the RL/random seed changes.
    pub fn with_seed(mut self, seed: u64) -> Result<Self, ScenarioError> {
        self.doc.seed = seed;
        if let Some(pcg) = self.doc.pcg.as_mut() {
            pcg.seed = seed;
            let layout = ChannelLayout::generate(pcg)?;
            self.world = layout.to_world_with_moorings(&self.doc.moored)?;
            self.layout = Some(layout);
        }
        Ok(self)
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self, ScenarioError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(ScenarioError::invalid("dt", "must be > 0"));
        }
        self.dt = dt;
        self.doc.dt = Some(dt);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_resolve() {
        for (name, _) in BUILTIN_SCENARIOS {
            Scenario::load(&format!("builtin:{name}")).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn missing_vessel_is_named() {
        let text = r#"
name = "x"
duration = 1.0
vessel = { path = "nowhere/boat.toml" }
controller = { kind = "open-loop", script = [] }
"#;
        let err = Scenario::from_str(text, Path::new("/tmp")).unwrap_err();
        assert!(err.to_string().contains("nowhere/boat.toml"), "{err}");
        let err = Scenario::from_str(&text.replace("path = \"nowhere/boat.toml\"", "builtin = \"dinghy\""), Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("dinghy"), "{err}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = ScenarioDoc::parse("name = \"x\"\nduration = \n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = ScenarioDoc::parse("name = \"x\"\nduration = 1.0\nvessel = {}\nbogus = 1\ncontroller = { kind = \"pid\" }\n")
            .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn controller_kind_must_be_known() {
        let err = ScenarioDoc::parse("name = \"x\"\nduration = 1.0\nvessel = {}\ncontroller = { kind = \"autopilot\" }\n")
            .unwrap_err();
        assert!(err.to_string().contains("autopilot"), "{err}");
    }

    #[test]
    fn schedules_must_be_ordered() {
        let text = r#"
name = "x"
duration = 1.0
vessel = { builtin = "example-ferry" }
current = [{ t = 5.0, speed = 0.1, heading = 0.0 }, { t = 1.0, speed = 0.1, heading = 0.0 }]
controller = { kind = "pid" }
"#;
        let err = Scenario::from_str(text, Path::new(".")).unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref field, .. } if field == "current"), "{err}");
    }
}
