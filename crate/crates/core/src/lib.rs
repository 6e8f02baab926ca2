//! Headless, deterministic simulation toolkit for autonomous surface vessels.

pub mod angle;
pub mod control;
pub mod dwa;
pub mod dynamics;
pub mod geometry;
pub mod prng;
pub mod radar;
pub mod rl;
pub mod scenario;
pub mod service;
pub mod world;

pub use dynamics::{
    BodyVelocity, ControlCommand, CurrentSpec, GeneralizedForce, Pose, SimState, Simulation,
    ThrusterCommand, VesselParams, WindForce,
};
pub use geometry::Point;
pub use radar::{RadarConfig, RadarFrame};
pub use rl::{Action, Observation};
pub use world::{ObstacleWorld, ScanFrame};
