use serde::{Deserialize, Serialize};

use super::{plan_step, radar_to_obstacles, scan_to_obstacles, DwaConfig, Plan, PlanError, VelocityTracker};
use crate::dynamics::{DynamicsError, SimState, Simulation, ThrusterCommand, VesselParams, DEFAULT_DT};
use crate::geometry::Point;
use crate::radar::{rasterize, RadarConfig};
use crate::world::{collision_check, raycast_scan, ObstacleWorld};

/// Closed-loop settings for following a waypoint path with the DWA planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransitConfig {
    pub dwa: DwaConfig,
    /// Time between planner calls.
    pub plan_period: f64,
    /// Time between velocity-tracker updates.
    pub control_period: f64,
    pub dt: f64,
    pub n_beams: usize,
    pub scan_range: f64,
    /// When set, obstacle points come from an emulated radar image instead of raw hits.
    pub radar: Option<RadarConfig>,
    pub decimation: Option<f64>,
    pub footprint_radius: f64,
    pub waypoint_tolerance: f64,
    pub goal_tolerance: f64,
    pub max_time: f64,
}

impl Default for TransitConfig {
    fn default() -> Self {
        Self {
            dwa: DwaConfig::default(),
            plan_period: 1.0,
            control_period: 0.1,
            dt: DEFAULT_DT,
            n_beams: 720,
            scan_range: 100.0,
            radar: None,
            decimation: Some(1.0),
            footprint_radius: 2.5,
            waypoint_tolerance: 12.0,
            goal_tolerance: 6.0,
            max_time: 900.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitStep {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub u: f64,
    pub v: f64,
    pub r: f64,
    pub thrust: f64,
    pub angle: f64,
    pub v_cmd: f64,
    pub omega_cmd: f64,
    pub waypoint: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitOutcome {
    Reached { t: f64 },
    Collision { t: f64 },
    Timeout,
    NoFeasibleTrajectory { plan_index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitReport {
    pub outcome: TransitOutcome,
    /// One entry per velocity-tracker update.
    pub steps: Vec<TransitStep>,
    pub plans: usize,
    /// Smallest distance from the vessel center to any obstacle segment.
    pub min_clearance: f64,
}

impl TransitReport {
    pub fn reached(&self) -> bool {
        matches!(self.outcome, TransitOutcome::Reached { .. })
    }
}

fn clearance(world: &ObstacleWorld, p: Point) -> f64 {
    world.segments().iter().map(|s| s.distance_to(p)).fold(f64::INFINITY, f64::min)
}

/// Drives the vessel from `world.spawn` through `waypoints` (the last one
/// being the goal). `on_plan` sees every planner result.
pub fn run_transit(
    params: &VesselParams,
    world: &ObstacleWorld,
    waypoints: &[Point],
    config: &TransitConfig,
    mut on_plan: impl FnMut(usize, &Plan),
) -> Result<TransitReport, DynamicsError> {
    let mut tracker = VelocityTracker::calibrate(params)?;
    let mut sim = Simulation::new(params.clone(), SimState::at_rest(world.spawn, &world.current), config.dt)?;
    sim.wind = world.wind;
    sim.current = world.current;

    let path: Vec<Point> = if waypoints.is_empty() { vec![world.goal] } else { waypoints.to_vec() };
    let substeps = ((config.control_period / config.dt).round() as usize).max(1);
    let controls_per_plan = ((config.plan_period / config.control_period).round() as usize).max(1);
    let mut wp = 0usize;
    let mut steps = Vec::new();
    let mut min_clearance = f64::INFINITY;
    let mut plan_index = 0usize;

    let outcome = 'run: loop {
        if sim.state.t >= config.max_time {
            break TransitOutcome::Timeout;
        }
        let pose = sim.state.pose;
        while wp + 1 < path.len() && pose.distance_to(path[wp].x, path[wp].y) < config.waypoint_tolerance {
            wp += 1;
        }
        let scan = raycast_scan(world, &pose, config.n_beams, config.scan_range);
        let obstacles = match &config.radar {
            Some(radar) => {
                let hits: Vec<Point> = scan.points().collect();
                let frame = rasterize(&hits, Point::new(pose.x, pose.y), radar)
                    .expect("radar configuration validated by caller");
                radar_to_obstacles(&frame, config.decimation).expect("fixed extent is always present")
            }
            None => scan_to_obstacles(&scan, config.decimation),
        };
        let nu = sim.absolute_velocity();
        let plan = match plan_step(&pose, nu.u, nu.r, path[wp], &obstacles, &config.dwa, config.plan_period) {
            Ok(p) => p,
            Err(PlanError::NoFeasibleTrajectory) => break TransitOutcome::NoFeasibleTrajectory { plan_index },
            Err(e) => panic!("planner rejected its configuration: {e}"),
        };
        on_plan(plan_index, &plan);
        plan_index += 1;

        for _ in 0..controls_per_plan {
            let nu = sim.absolute_velocity();
            let cmd = tracker.update(plan.v, plan.omega, &nu, config.control_period);
            let pose = sim.state.pose;
            let first = cmd.0.first().copied().unwrap_or(ThrusterCommand::NEUTRAL);
            steps.push(TransitStep {
                t: sim.state.t,
                x: pose.x,
                y: pose.y,
                psi: pose.psi,
                u: nu.u,
                v: nu.v,
                r: nu.r,
                thrust: first.thrust,
                angle: first.angle,
                v_cmd: plan.v,
                omega_cmd: plan.omega,
                waypoint: wp,
            });
            sim.set_command(cmd)?;
            for _ in 0..substeps {
                sim.step()?;
                let pose = sim.state.pose;
                min_clearance = min_clearance.min(clearance(world, Point::new(pose.x, pose.y)));
                if collision_check(world, &pose, config.footprint_radius) {
                    break 'run TransitOutcome::Collision { t: sim.state.t };
                }
                if wp + 1 == path.len() && pose.distance_to(world.goal.x, world.goal.y) <= config.goal_tolerance {
                    break 'run TransitOutcome::Reached { t: sim.state.t };
                }
            }
        }
    };
    Ok(TransitReport { outcome, steps, plans: plan_index, min_clearance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Pose;

    #[test]
    fn open_water_reaches_goal() {
        let params = VesselParams::example_ferry();
        let world = ObstacleWorld::open_water(Point::new(80.0, 40.0), Pose::default());
        let cfg = TransitConfig::default();
        let report = run_transit(&params, &world, &[], &cfg, |_, _| {}).unwrap();
        assert!(report.reached(), "{:?}", report.outcome);
        assert_eq!(report.min_clearance, f64::INFINITY);
    }
}
