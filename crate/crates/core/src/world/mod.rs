//! Scene geometry, procedural waterways, collision queries and the planar
//! range sensor.

mod collision;
mod doc;
mod export;
mod pcg;
mod scan;

pub use collision::collision_check;
pub use doc::WorldDoc;
pub use export::{write_preview_csv, write_preview_svg};
pub use pcg::{generate_channel, ChannelLayout, MooredVessel, PcgParams, Side};
pub use scan::{raycast_scan, subsample, ScanFrame};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{CurrentSpec, Pose, WindForce};
use crate::geometry::{Point, Segment};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("obstacle {index}: {reason}")]
    InvalidObstacle { index: usize, reason: String },
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("moored vessel {index}: {reason}")]
    InvalidMooring { index: usize, reason: String },
    #[error("failed to parse world document: {0}")]
    Parse(String),
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "points", rename_all = "lowercase")]
pub enum Obstacle {
    /// Closed polygon; the last vertex connects back to the first.
    Polygon(Vec<Point>),
    /// Open chain of segments.
    Polyline(Vec<Point>),
}

impl Obstacle {
    pub fn points(&self) -> &[Point] {
        match self {
            Obstacle::Polygon(p) | Obstacle::Polyline(p) => p,
        }
    }

    pub fn segments(&self) -> Vec<Segment> {
        let pts = self.points();
        let mut segs: Vec<Segment> = pts.windows(2).map(|w| Segment::new(w[0], w[1])).collect();
        if let Obstacle::Polygon(p) = self {
            if p.len() > 2 {
                segs.push(Segment::new(p[p.len() - 1], p[0]));
            }
        }
        segs
    }

    fn validate(&self, index: usize) -> Result<(), WorldError> {
        let bad = |reason: &str| WorldError::InvalidObstacle { index, reason: reason.to_string() };
        if self.points().iter().any(|p| !p.is_finite()) {
            return Err(bad("non-finite vertex"));
        }
        match self {
            Obstacle::Polyline(p) if p.len() < 2 => Err(bad("polyline needs at least 2 vertices")),
            Obstacle::Polygon(p) if p.len() < 3 => Err(bad("polygon needs at least 3 vertices")),
            Obstacle::Polygon(_) => {
                let segs = self.segments();
                let n = segs.len();
                for i in 0..n {
                    for j in (i + 1)..n {
                        let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                        if !adjacent && segs[i].intersects(&segs[j]) {
                            return Err(bad("polygon is self-intersecting"));
                        }
                    }
                }
                Ok(())
            }
            Obstacle::Polyline(_) => Ok(()),
        }
    }
}

/// Immutable scene: obstacles, goal, spawn pose and environmental loads.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleWorld {
    obstacles: Vec<Obstacle>,
    segments: Vec<Segment>,
    pub goal: Point,
    pub spawn: Pose,
    pub current: CurrentSpec,
    pub wind: WindForce,
}

impl ObstacleWorld {
    pub fn new(obstacles: Vec<Obstacle>, goal: Point, spawn: Pose) -> Result<Self, WorldError> {
        for (i, o) in obstacles.iter().enumerate() {
            o.validate(i)?;
        }
        if !goal.is_finite() {
            return Err(WorldError::NonFinite("goal"));
        }
        if !(spawn.x.is_finite() && spawn.y.is_finite() && spawn.psi.is_finite()) {
            return Err(WorldError::NonFinite("spawn"));
        }
        let segments = obstacles.iter().flat_map(Obstacle::segments).collect();
        Ok(Self {
            obstacles,
            segments,
            goal,
            spawn,
            current: CurrentSpec::NONE,
            wind: WindForce::ZERO,
        })
    }

    /// World without obstacles.
    pub fn open_water(goal: Point, spawn: Pose) -> Self {
        Self::new(Vec::new(), goal, spawn).expect("empty world is valid")
    }

    pub fn with_current(mut self, current: CurrentSpec) -> Self {
        self.current = current;
        self
    }

    pub fn with_wind(mut self, wind: WindForce) -> Self {
        self.wind = wind;
        self
    }

    /// Returns a copy with extra obstacles appended.
    pub fn with_obstacles(&self, extra: impl IntoIterator<Item = Obstacle>) -> Result<Self, WorldError> {
        let mut obstacles = self.obstacles.clone();
        obstacles.extend(extra);
        let mut w = Self::new(obstacles, self.goal, self.spawn)?;
        w.current = self.current;
        w.wind = self.wind;
        Ok(w)
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }
}
