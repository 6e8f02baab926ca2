use serde::{Deserialize, Serialize};

use super::{Obstacle, ObstacleWorld, WorldError};
use crate::dynamics::{CurrentSpec, Pose, WindForce};
use crate::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointList {
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentDoc {
    pub speed: f64,
    /// Earth-frame heading in radians.
    pub heading: f64,
}

/// Scenario world document (TOML).
///
/// ```toml
/// goal = [120.0, 0.0]
/// spawn = [0.0, 0.0, 0.0]      # x, y, heading (rad)
/// current = { speed = 0.3, heading = 2.356 }
/// wind = [0.0, 0.0, 0.0]       # body-frame surge N, sway N, yaw N·m
///
/// [[polygon]]
/// points = [[10.0, 5.0], [20.0, 5.0], [20.0, 9.0]]
///
/// [[polyline]]
/// points = [[0.0, -20.0], [150.0, -20.0]]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldDoc {
    pub goal: [f64; 2],
    pub spawn: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current: Option<CurrentDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wind: Option<[f64; 3]>,
    #[serde(default, rename = "polygon", skip_serializing_if = "Vec::is_empty")]
    pub polygons: Vec<PointList>,
    #[serde(default, rename = "polyline", skip_serializing_if = "Vec::is_empty")]
    pub polylines: Vec<PointList>,
}

fn to_points(l: &PointList) -> Vec<Point> {
    l.points.iter().map(|&p| p.into()).collect()
}

fn to_list(p: &[Point]) -> PointList {
    PointList { points: p.iter().map(|&q| q.into()).collect() }
}

impl WorldDoc {
    pub fn parse(text: &str) -> Result<Self, WorldError> {
        toml::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("world document serializes")
    }

    pub fn into_world(self) -> Result<ObstacleWorld, WorldError> {
        let obstacles = self
            .polygons
            .iter()
            .map(|l| Obstacle::Polygon(to_points(l)))
            .chain(self.polylines.iter().map(|l| Obstacle::Polyline(to_points(l))))
            .collect();
        let [sx, sy, spsi] = self.spawn;
        let mut world = ObstacleWorld::new(obstacles, self.goal.into(), Pose::new(sx, sy, spsi))?;
        if let Some(c) = self.current {
            world.current = CurrentSpec::new(c.speed, c.heading).map_err(|_| WorldError::NonFinite("current"))?;
        }
        if let Some([x, y, n]) = self.wind {
            if ![x, y, n].iter().all(|v| v.is_finite()) {
                return Err(WorldError::NonFinite("wind"));
            }
            world.wind = WindForce::new(x, y, n);
        }
        Ok(world)
    }

    pub fn from_world(world: &ObstacleWorld) -> Self {
        let mut polygons = Vec::new();
        let mut polylines = Vec::new();
        for o in world.obstacles() {
            match o {
                Obstacle::Polygon(p) => polygons.push(to_list(p)),
                Obstacle::Polyline(p) => polylines.push(to_list(p)),
            }
        }
        let current = (world.current != CurrentSpec::NONE)
            .then_some(CurrentDoc { speed: world.current.speed, heading: world.current.heading });
        let wind = (world.wind != WindForce::ZERO).then_some([world.wind.surge, world.wind.sway, world.wind.yaw]);
        Self {
            goal: world.goal.into(),
            spawn: [world.spawn.x, world.spawn.y, world.spawn.psi],
            current,
            wind,
            polygons,
            polylines,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"
goal = [120.0, 0.0]
spawn = [0.0, 0.0, 0.0]
current = { speed = 0.3, heading = 2.356 }

[[polygon]]
points = [[10.0, 5.0], [20.0, 5.0], [20.0, 9.0]]

[[polyline]]
points = [[0.0, -20.0], [150.0, -20.0]]
"#;

    #[test]
    fn parse_and_round_trip() {
        let w = WorldDoc::parse(DOC).unwrap().into_world().unwrap();
        assert_eq!(w.obstacles().len(), 2);
        assert_eq!(w.segments().len(), 4);
        assert_eq!(w.current.speed, 0.3);
        let again = WorldDoc::parse(&WorldDoc::from_world(&w).to_toml()).unwrap().into_world().unwrap();
        assert_eq!(again, w);
    }

    #[test]
    fn self_intersecting_polygon_rejected() {
        let doc = r#"
goal = [0.0, 0.0]
spawn = [0.0, 0.0, 0.0]
[[polygon]]
points = [[0.0, 0.0], [10.0, 10.0], [10.0, 0.0], [0.0, 10.0]]
"#;
        let err = WorldDoc::parse(doc).unwrap().into_world().unwrap_err();
        assert!(matches!(err, WorldError::InvalidObstacle { index: 0, .. }));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(WorldDoc::parse("goal = [0.0, 0.0]\nspawn = [0.0,0.0,0.0]\nbogus = 1").is_err());
    }
}
