//! Dynamic Window Approach local planner.
//!
//! Velocity pairs `(v, ω)` reachable within one planning period are rolled
//! out as constant-curvature arcs and scored with
//! `C_total = C_goal + C_obstacle + C_speed`; the cheapest pair wins.
//! `ω` is the yaw rate (rad/s, counter-clockwise positive).

mod follow;
mod index;
mod transit;

pub use follow::VelocityTracker;
pub use index::ObstacleIndex;
pub use transit::{run_transit, TransitConfig, TransitOutcome, TransitReport, TransitStep};

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::angle_diff;
use crate::dynamics::Pose;
use crate::geometry::Point;
use crate::radar::{RadarError, RadarFrame};
use crate::world::ScanFrame;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no feasible trajectory: every candidate collides")]
    NoFeasibleTrajectory,
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Radar(#[from] RadarError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DwaConfig {
    pub v_max: f64,
    pub v_min: f64,
    pub omega_max: f64,
    pub accel_v: f64,
    pub accel_omega: f64,
    pub v_resolution: f64,
    pub omega_resolution: f64,
    pub horizon: f64,
    pub rollout_dt: f64,
    pub g_goal: f64,
    pub g_obstacle: f64,
    pub g_speed: f64,
    pub d_threshold: f64,
}

impl Default for DwaConfig {
    fn default() -> Self {
        Self {
            v_max: 2.0,
            v_min: 0.0,
            omega_max: 0.1,
            accel_v: 0.2,
            accel_omega: 0.04,
            v_resolution: 0.1,
            omega_resolution: 0.01,
            horizon: 12.0,
            rollout_dt: 0.5,
            g_goal: 1.0,
            g_obstacle: 8.0,
            g_speed: 0.5,
            d_threshold: 4.0,
        }
    }
}

impl DwaConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidConfig(m.to_string()));
        let all = [
            self.v_max,
            self.v_min,
            self.omega_max,
            self.accel_v,
            self.accel_omega,
            self.v_resolution,
            self.omega_resolution,
            self.horizon,
            self.rollout_dt,
            self.g_goal,
            self.g_obstacle,
            self.g_speed,
            self.d_threshold,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite value");
        }
        if self.v_resolution <= 0.0 || self.omega_resolution <= 0.0 {
            return bad("resolutions must be > 0");
        }
        if !(self.rollout_dt > 0.0 && self.horizon >= self.rollout_dt) {
            return bad("need horizon >= rollout_dt > 0");
        }
        if self.g_goal < 0.0 || self.g_obstacle < 0.0 || self.g_speed < 0.0 {
            return bad("weights must be >= 0");
        }
        if self.v_min > self.v_max || self.omega_max < 0.0 || self.accel_v < 0.0 || self.accel_omega < 0.0 {
            return bad("need v_min <= v_max and non-negative limits");
        }
        Ok(())
    }

    /// Multiplies the three cost weights by `factor`.
    pub fn scale_weights(mut self, factor: f64) -> Self {
        self.g_goal *= factor;
        self.g_obstacle *= factor;
        self.g_speed *= factor;
        self
    }
}

/// Grid over `[lo, hi]` at `res`; both endpoints always present.
fn axis_grid(lo: f64, hi: f64, res: f64) -> Vec<f64> {
    let mut out = vec![lo];
    let mut k = 1u32;
    loop {
        let x = lo + f64::from(k) * res;
        if x >= hi - 1e-9 * res {
            break;
        }
        out.push(x);
        k += 1;
    }
    if hi > lo {
        out.push(hi);
    }
    out
}

fn window_axis(current: f64, lower: f64, upper: f64, accel: f64, dt: f64, res: f64) -> Vec<f64> {
    let lo = lower.max(current - accel * dt);
    let hi = upper.min(current + accel * dt);
    if lo > hi {
        // Current value outside the admissible range: collapse onto the nearest bound.
        let c = current.clamp(lower, upper);
        return vec![c];
    }
    axis_grid(lo, hi, res)
}

/// Velocity pairs reachable from `(v, ω)` within `window_dt`, `v`-major order.
pub fn dynamic_window(v: f64, omega: f64, config: &DwaConfig, window_dt: f64) -> Vec<(f64, f64)> {
    let vs = window_axis(v, config.v_min, config.v_max, config.accel_v, window_dt, config.v_resolution);
    let ws = window_axis(
        omega,
        -config.omega_max,
        config.omega_max,
        config.accel_omega,
        window_dt,
        config.omega_resolution,
    );
    vs.iter().flat_map(|&a| ws.iter().map(move |&b| (a, b))).collect()
}

/// Constant-`(v, ω)` rollout for `⌈T/dt⌉` steps; the start pose is not included.
pub fn rollout(v: f64, omega: f64, start: &Pose, horizon: f64, dt: f64) -> Vec<Pose> {
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let (mut x, mut y, mut psi) = (start.x, start.y, start.psi);
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        psi += omega * dt;
        x += v * psi.cos() * dt;
        y += v * psi.sin() * dt;
        out.push(Pose::new(x, y, psi));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Costs {
    pub goal: f64,
    pub obstacle: f64,
    pub speed: f64,
    pub total: f64,
    /// Closest approach to any obstacle point along the trajectory.
    pub d_min: f64,
}

fn combine(trajectory: &[Pose], v: f64, goal: Point, d_min: f64, config: &DwaConfig) -> Costs {
    let end = trajectory.last().expect("non-empty trajectory");
    let bearing = end.bearing_to(goal.x, goal.y);
    let goal_cost = config.g_goal * angle_diff(bearing, end.psi).abs();
    let obstacle = if d_min > config.d_threshold { config.g_obstacle / d_min } else { f64::INFINITY };
    let speed = config.g_speed * (config.v_max - v);
    Costs { goal: goal_cost, obstacle, speed, total: goal_cost + obstacle + speed, d_min }
}

/// Scores one trajectory against raw obstacle points (exhaustive distance search).
pub fn score(trajectory: &[Pose], v: f64, goal: Point, obstacles: &[Point], config: &DwaConfig) -> Costs {
    let d_min = trajectory
        .iter()
        .flat_map(|p| obstacles.iter().map(move |o| Point::new(p.x, p.y).distance(*o)))
        .fold(f64::INFINITY, f64::min);
    combine(trajectory, v, goal, d_min, config)
}

fn score_indexed(trajectory: &[Pose], v: f64, goal: Point, index: &ObstacleIndex, config: &DwaConfig) -> Costs {
    let d_min = trajectory
        .iter()
        .map(|p| index.nearest_distance(Point::new(p.x, p.y)))
        .fold(f64::INFINITY, f64::min);
    combine(trajectory, v, goal, d_min, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub v: f64,
    pub omega: f64,
    pub trajectory: Vec<Pose>,
    pub costs: Costs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub v: f64,
    pub omega: f64,
    pub best: usize,
    pub candidates: Vec<Candidate>,
}

impl Plan {
    pub fn chosen(&self) -> &Candidate {
        &self.candidates[self.best]
    }
}

/// Selection order: lower total cost, then higher `v`, then `|ω|` closer to
/// zero, then earlier enumeration index.
pub fn compare_candidates(a: (usize, &Candidate), b: (usize, &Candidate)) -> Ordering {
    let (ia, ca) = a;
    let (ib, cb) = b;
    ca.costs
        .total
        .partial_cmp(&cb.costs.total)
        .unwrap_or(Ordering::Equal)
        .then_with(|| cb.v.partial_cmp(&ca.v).unwrap_or(Ordering::Equal))
        .then_with(|| ca.omega.abs().partial_cmp(&cb.omega.abs()).unwrap_or(Ordering::Equal))
        .then_with(|| ia.cmp(&ib))
}

/// Evaluates the dynamic window around `(v, ω)` and returns the cheapest pair.
#[allow(clippy::too_many_arguments)]
pub fn plan_step(
    pose: &Pose,
    v: f64,
    omega: f64,
    goal: Point,
    obstacles: &[Point],
    config: &DwaConfig,
    window_dt: f64,
) -> Result<Plan, PlanError> {
    config.validate()?;
    let index = ObstacleIndex::new(obstacles, config.d_threshold.max(1.0));
    let candidates: Vec<Candidate> = dynamic_window(v, omega, config, window_dt)
        .into_iter()
        .map(|(cv, cw)| {
            let trajectory = rollout(cv, cw, pose, config.horizon, config.rollout_dt);
            let costs = score_indexed(&trajectory, cv, goal, &index, config);
            Candidate { v: cv, omega: cw, trajectory, costs }
        })
        .collect();
    let best = candidates
        .iter()
        .enumerate()
        .min_by(|a, b| compare_candidates(*a, *b))
        .map(|(i, _)| i)
        .expect("window is never empty");
    if !candidates[best].costs.total.is_finite() {
        return Err(PlanError::NoFeasibleTrajectory);
    }
    Ok(Plan { v: candidates[best].v, omega: candidates[best].omega, best, candidates })
}

fn decimate(points: impl Iterator<Item = Point>, cell: Option<f64>) -> Vec<Point> {
    match cell {
        Some(c) if c > 0.0 => {
            let mut seen = BTreeSet::new();
            points
                .filter(|p| seen.insert(((p.x / c).floor() as i64, (p.y / c).floor() as i64)))
                .collect()
        }
        _ => points.collect(),
    }
}

/// Appends one CSV row per candidate: `step,index,v,omega,cost_goal,cost_obstacle,cost_speed,cost_total,d_min,chosen`.
/// A header is written when `header` is true.
pub fn write_candidates_csv<W: std::io::Write>(
    out: &mut csv::Writer<W>,
    step: usize,
    plan: &Plan,
    header: bool,
) -> csv::Result<()> {
    if header {
        out.write_record([
            "step",
            "index",
            "v",
            "omega",
            "cost_goal",
            "cost_obstacle",
            "cost_speed",
            "cost_total",
            "d_min",
            "chosen",
        ])?;
    }
    for (i, c) in plan.candidates.iter().enumerate() {
        out.write_record([
            step.to_string(),
            i.to_string(),
            c.v.to_string(),
            c.omega.to_string(),
            c.costs.goal.to_string(),
            c.costs.obstacle.to_string(),
            c.costs.speed.to_string(),
            c.costs.total.to_string(),
            c.costs.d_min.to_string(),
            u8::from(i == plan.best).to_string(),
        ])?;
    }
    Ok(())
}

/// Metric pixel centers of every set pixel, optionally thinned to one point per grid cell.
pub fn radar_to_obstacles(frame: &RadarFrame, decimation: Option<f64>) -> Result<Vec<Point>, PlanError> {
    if frame.extent.is_none() {
        return Err(PlanError::Radar(RadarError::MissingExtent));
    }
    let pts: Vec<Point> = frame
        .set_pixels()
        .map(|(x, y)| frame.pixel_center(x, y))
        .collect::<Result<_, _>>()?;
    Ok(decimate(pts.into_iter(), decimation))
}

/// Scan hits as obstacle points, optionally thinned to one point per grid cell.
pub fn scan_to_obstacles(scan: &ScanFrame, decimation: Option<f64>) -> Vec<Point> {
    decimate(scan.points(), decimation)
}
