use serde::{Deserialize, Serialize};

use super::{Controller, CurrentEntry, PolicyKind, Scenario, ScenarioError, Start};
use crate::control::Pid;
use crate::dwa::{run_transit, write_candidates_csv, TransitOutcome};
use crate::dynamics::{
    ControlCommand, CurrentSpec, SimState, Simulation, ThrusterCommand, WindForce,
};
use crate::geometry::Point;
use crate::world::ObstacleWorld;
use crate::rl::{run_policy_with, Environment, EpisodeLog, EpisodeStats, GoalSeekingPolicy, Policy, RandomPolicy};

/// One trajectory sample; velocities are over ground in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub thrust: f64,
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub label: String,
    pub samples: usize,
    pub final_t: f64,
    pub final_x: f64,
    pub final_y: f64,
    pub final_psi: f64,
    pub final_speed: f64,
    pub max_abs_y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_clearance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_plan: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    /// Empty for single runs; `vc<speed>` for sweep members.
    pub label: String,
    pub rows: Vec<TrajectoryRow>,
    pub summary: RunSummary,
    pub dwa_outcome: Option<TransitOutcome>,
    pub episodes: Vec<EpisodeStats>,
    /// Candidate dump CSV text, when requested.
    pub candidates: Option<String>,
    /// Episode step log and summary CSV texts, when requested.
    pub episode_logs: Option<(String, String)>,
}

impl ScenarioRun {
    pub fn write_trajectory<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "y", "psi", "u", "v", "r", "thrust", "angle"])?;
        for r in &self.rows {
            w.write_record([r.t, r.x, r.y, r.psi, r.u, r.v, r.r, r.thrust, r.angle].map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn at<T: Copy>(entries: &[(f64, T)], t: f64) -> Option<T> {
    entries.iter().rev().find(|(start, _)| *start <= t + 1e-12).map(|(_, v)| *v)
}

struct Schedules {
    current: Vec<(f64, CurrentSpec)>,
    wind: Vec<(f64, WindForce)>,
    base_current: CurrentSpec,
    base_wind: WindForce,
}

impl Schedules {
    fn new(s: &Scenario, current: &[CurrentEntry]) -> Result<Self, ScenarioError> {
        let current = current
            .iter()
            .map(|c| {
                CurrentSpec::new(c.speed, c.heading)
                    .map(|spec| (c.t, spec))
                    .map_err(|e| ScenarioError::invalid("current", e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let wind = s.doc.wind.iter().map(|w| (w.t, WindForce::new(w.force[0], w.force[1], w.force[2]))).collect();
        Ok(Self { current, wind, base_current: s.world.current, base_wind: s.world.wind })
    }

    /// World with the loads in force at t = 0; later schedule entries are ignored.
    fn constant_world(&self, world: &ObstacleWorld) -> ObstacleWorld {
        if self.current.len() > 1 || self.wind.len() > 1 {
            log::warn!("closed-loop runs hold the t = 0 current and wind; later schedule entries are ignored");
        }
        let mut world = world.clone();
        world.current = at(&self.current, 0.0).unwrap_or(self.base_current);
        world.wind = at(&self.wind, 0.0).unwrap_or(self.base_wind);
        world
    }

    fn apply(&self, sim: &mut Simulation) {
        let t = sim.state.t;
        sim.current = at(&self.current, t).unwrap_or(self.base_current);
        sim.wind = at(&self.wind, t).unwrap_or(self.base_wind);
    }
}

fn row(sim: &Simulation) -> TrajectoryRow {
    let nu = sim.absolute_velocity();
    let cmd = sim.command().0.first().copied().unwrap_or(ThrusterCommand::NEUTRAL);
    let p = sim.state.pose;
    TrajectoryRow { t: sim.state.t, x: p.x, y: p.y, psi: p.psi, u: nu.u, v: nu.v, r: nu.r, thrust: cmd.thrust, angle: cmd.angle }
}

fn summarize(s: &Scenario, label: &str, rows: &[TrajectoryRow]) -> RunSummary {
    let last = rows.last().copied().unwrap_or(TrajectoryRow {
        t: 0.0,
        x: 0.0,
        y: 0.0,
        psi: 0.0,
        u: 0.0,
        v: 0.0,
        r: 0.0,
        thrust: 0.0,
        angle: 0.5,
    });
    RunSummary {
        scenario: s.doc.name.clone(),
        label: label.to_string(),
        samples: rows.len(),
        final_t: last.t,
        final_x: last.x,
        final_y: last.y,
        final_psi: last.psi,
        final_speed: last.u.hypot(last.v),
        max_abs_y: rows.iter().map(|r| r.y.abs()).fold(0.0, f64::max),
        outcome: None,
        min_clearance: None,
        success_rate: None,
        failed_plan: None,
    }
}

fn new_sim(s: &Scenario, sched: &Schedules) -> Result<Simulation, ScenarioError> {
    let mut sim = Simulation::new(s.params.clone(), SimState::drifting(s.world.spawn), s.dt)?;
    sched.apply(&mut sim);
    if s.doc.start == Start::Rest {
        sim.state = SimState::at_rest(s.world.spawn, &sim.current);
    }
    Ok(sim)
}

fn uniform(sim: &Simulation, thrust: f64, angle: f64) -> ControlCommand {
    ControlCommand(vec![ThrusterCommand::new(thrust, angle); sim.params.thrusters().len()])
}

fn run_timed(
    s: &Scenario,
    sched: &Schedules,
    mut control: impl FnMut(&Simulation, f64) -> ControlCommand,
    control_period: f64,
) -> Result<Vec<TrajectoryRow>, ScenarioError> {
    let mut sim = new_sim(s, sched)?;
    let steps = (s.doc.duration / s.dt).round() as usize;
    let sample_every = ((s.doc.outputs.sample_period / s.dt).round() as usize).max(1);
    let control_every = ((control_period / s.dt).round() as usize).max(1);
    let mut rows = Vec::with_capacity(steps / sample_every + 2);
    for k in 0..=steps {
        sched.apply(&mut sim);
        if k % control_every == 0 {
            let cmd = control(&sim, control_period);
            sim.set_command(cmd)?;
        }
        if k % sample_every == 0 || k == steps {
            rows.push(row(&sim));
        }
        if k < steps {
            sim.step()?;
        }
    }
    Ok(rows)
}

fn run_single(s: &Scenario, label: &str, current: &[CurrentEntry]) -> Result<ScenarioRun, ScenarioError> {
    let sched = Schedules::new(s, current)?;
    let mut out = ScenarioRun {
        label: label.to_string(),
        rows: Vec::new(),
        summary: summarize(s, label, &[]),
        dwa_outcome: None,
        episodes: Vec::new(),
        candidates: None,
        episode_logs: None,
    };
    match &s.doc.controller {
        Controller::OpenLoop { script } => {
            let script: Vec<(f64, (f64, f64))> = script.iter().map(|e| (e.t, (e.thrust, e.angle))).collect();
            out.rows = run_timed(
                s,
                &sched,
                |sim, _| {
                    let (thrust, angle) = at(&script, sim.state.t).unwrap_or((0.0, 0.5));
                    uniform(sim, thrust, angle)
                },
                s.dt,
            )?;
            out.summary = summarize(s, label, &out.rows);
        }
        Controller::Pid { target_speed, gains, period } => {
            let mut pid = Pid::new(gains[0], gains[1], gains[2], *target_speed);
            out.rows = run_timed(
                s,
                &sched,
                |sim, dt| {
                    let thrust = pid.update(sim.state.ground_speed(&sim.current), dt);
                    uniform(sim, thrust, 0.5)
                },
                *period,
            )?;
            out.summary = summarize(s, label, &out.rows);
        }
        Controller::Dwa { transit } => {
            let world = sched.constant_world(&s.world);
            let mut cfg = transit.clone();
            cfg.dt = s.dt;
            cfg.max_time = s.doc.duration;
            let waypoints: Vec<Point> = match &s.layout {
                Some(l) => l.centerline[1..].to_vec(),
                None => vec![s.world.goal],
            };
            let mut dump = s.doc.outputs.candidates.as_ref().map(|_| csv::Writer::from_writer(Vec::new()));
            let mut dump_err = None;
            let report = run_transit(&s.params, &world, &waypoints, &cfg, |i, plan| {
                if let Some(w) = dump.as_mut() {
                    if let Err(e) = write_candidates_csv(w, i, plan, i == 0) {
                        dump_err.get_or_insert(e);
                    }
                }
            })?;
            if let Some(e) = dump_err {
                return Err(ScenarioError::invalid("outputs.candidates", e.to_string()));
            }
            out.candidates = dump.map(|w| String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv"));
            out.rows = report
                .steps
                .iter()
                .map(|st| TrajectoryRow {
                    t: st.t,
                    x: st.x,
                    y: st.y,
                    psi: st.psi,
                    u: st.u,
                    v: st.v,
                    r: st.r,
                    thrust: st.thrust,
                    angle: st.angle,
                })
                .collect();
            out.summary = summarize(s, label, &out.rows);
            out.summary.min_clearance = Some(report.min_clearance).filter(|c| c.is_finite());
            out.summary.outcome = Some(
                match report.outcome {
                    TransitOutcome::Reached { .. } => "goal",
                    TransitOutcome::Collision { .. } => "collision",
                    TransitOutcome::Timeout => "timeout",
                    TransitOutcome::NoFeasibleTrajectory { .. } => "no-feasible-trajectory",
                }
                .to_string(),
            );
            if let TransitOutcome::NoFeasibleTrajectory { plan_index } = report.outcome {
                out.summary.failed_plan = Some(plan_index);
            }
            out.dwa_outcome = Some(report.outcome);
        }
        Controller::RlPolicy { policy, episodes, env } => {
            let mut env_cfg = *env;
            env_cfg.dt = s.dt;
            let world = sched.constant_world(&s.world);
            let mut environment = Environment::new(s.params.clone(), world, env_cfg)?;
            let mut pol: Box<dyn Policy> = match policy {
                PolicyKind::GoalSeeking => Box::new(GoalSeekingPolicy::for_vessel(&s.params)),
                PolicyKind::Random => Box::new(RandomPolicy::new(s.doc.seed)),
            };
            let steps_buf = SharedBuf::default();
            let eps_buf = SharedBuf::default();
            let mut log = match s.doc.outputs.episodes {
                Some(_) => Some(
                    EpisodeLog::new(Box::new(steps_buf.clone()), Box::new(eps_buf.clone()))
                        .map_err(|e| ScenarioError::invalid("outputs.episodes", e.to_string()))?,
                ),
                None => None,
            };
            let mut rows = Vec::new();
            let first = (environment.simulation().state.t, environment.pose());
            rows.push(TrajectoryRow {
                t: first.0,
                x: first.1.x,
                y: first.1.y,
                psi: first.1.psi,
                u: 0.0,
                v: 0.0,
                r: 0.0,
                thrust: 0.0,
                angle: 0.5,
            });
            let stats = run_policy_with(
                &mut environment,
                pol.as_mut(),
                *episodes,
                s.doc.seed,
                log.as_mut(),
                &mut |k, env, action, _| {
                    if k == 0 {
                        let sim = env.simulation();
                        let mut r = row(sim);
                        let (a, _) = action.clamped();
                        r.thrust = a.thrust;
                        r.angle = a.angle;
                        rows.push(r);
                    }
                },
            )?;
            if let Some(mut l) = log {
                l.flush().map_err(|e| ScenarioError::invalid("outputs.episodes", e.to_string()))?;
                drop(l);
                out.episode_logs = Some((steps_buf.text(), eps_buf.text()));
            }
            out.rows = rows;
            out.summary = summarize(s, label, &out.rows);
            if let Some(last) = stats.last() {
                out.summary.outcome = Some(stats[0].outcome.as_str().to_string());
                out.summary.success_rate = Some(last.success_rate_running);
            }
            out.episodes = stats;
        }
    }
    Ok(out)
}

/// Clonable in-memory sink for the CSV loggers.
#[derive(Clone, Default)]
struct SharedBuf(std::rc::Rc<std::cell::RefCell<Vec<u8>>>);

impl SharedBuf {
    fn text(&self) -> String {
        String::from_utf8(self.0.borrow().clone()).expect("utf-8 csv")
    }
}

impl std::io::Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

/// Runs the scenario, once per sweep value when a sweep is configured.
pub fn run_scenario(s: &Scenario) -> Result<Vec<ScenarioRun>, ScenarioError> {
    match &s.doc.sweep {
        None => Ok(vec![run_single(s, "", &s.doc.current)?]),
        Some(sweep) => sweep
            .current_speed
            .iter()
            .map(|&speed| {
                let current: Vec<CurrentEntry> = s.doc.current.iter().map(|c| CurrentEntry { speed, ..*c }).collect();
                run_single(s, &format!("vc{speed:.2}"), &current)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_run_samples_and_moves_forward() {
        let s = Scenario::load("builtin:straight").unwrap();
        let runs = run_scenario(&s).unwrap();
        assert_eq!(runs.len(), 1);
        let rows = &runs[0].rows;
        assert_eq!(rows.len(), 601);
        assert!((rows[10].t - 1.0).abs() < 1e-9);
        let last = rows.last().unwrap();
        assert!(last.x > 50.0 && last.y.abs() < 1e-6, "{last:?}");
        assert_eq!(runs[0].summary.samples, 601);
    }

    #[test]
    fn sweep_labels_and_drift() {
        let s = Scenario::load("builtin:current-sweep").unwrap();
        let runs = run_scenario(&s).unwrap();
        let labels: Vec<_> = runs.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["vc0.00", "vc0.25", "vc0.50"]);
        for r in &runs {
            assert_eq!((r.rows[0].u, r.rows[0].v), (0.0, 0.0));
        }
        let y: Vec<f64> = runs.iter().map(|r| r.summary.max_abs_y).collect();
        assert!(y[0] < 1e-6 && y[1] > 1.0 && y[2] > y[1], "{y:?}");
        let speed: Vec<f64> = runs.iter().map(|r| r.summary.final_speed).collect();
        assert!(speed[1] < speed[0] && speed[2] < speed[0], "{speed:?}");
        assert!(runs[1..].iter().all(|r| r.summary.final_psi != 0.0));
    }

    #[test]
    fn schedules_switch_at_their_start_time() {
        let text = r#"
name = "switch"
duration = 10.0
start = "drifting"
vessel = { builtin = "example-ferry" }
current = [{ t = 0.0, speed = 0.0, heading = 0.0 }, { t = 5.0, speed = 0.4, heading = 1.5707963267948966 }]
controller = { kind = "open-loop", script = [] }
"#;
        let s = Scenario::from_str(text, std::path::Path::new(".")).unwrap();
        let rows = &run_scenario(&s).unwrap()[0].rows;
        assert!(rows.iter().filter(|r| r.t <= 5.0).all(|r| r.y == 0.0));
        assert!(rows.last().unwrap().y > 1.5);
    }

    #[test]
    fn rl_scenario_records_episode_logs() {
        let s = Scenario::load("builtin:rl-fixed").unwrap();
        let run = run_scenario(&s).unwrap().remove(0);
        assert_eq!(run.summary.outcome.as_deref(), Some("goal"));
        let (steps, episodes) = run.episode_logs.unwrap();
        assert_eq!(steps.lines().count(), run.episodes[0].steps + 1);
        assert_eq!(episodes.lines().count(), 2);
        assert_eq!(run.rows.len(), run.episodes[0].steps + 1);
    }
}
