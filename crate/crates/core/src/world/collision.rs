use super::ObstacleWorld;
use crate::dynamics::Pose;
use crate::geometry::Point;

/// True iff the disc of `footprint_radius` centred on the pose touches any obstacle segment.
pub fn collision_check(world: &ObstacleWorld, pose: &Pose, footprint_radius: f64) -> bool {
    let c = Point::new(pose.x, pose.y);
    world.segments().iter().any(|s| s.distance_to(c) <= footprint_radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::SeededRng;
    use crate::world::Obstacle;

    fn square_world() -> ObstacleWorld {
        let sq = Obstacle::Polygon(vec![
            Point::new(10.0, 10.0),
            Point::new(20.0, 10.0),
            Point::new(20.0, 20.0),
            Point::new(10.0, 20.0),
        ]);
        let wall = Obstacle::Polyline(vec![Point::new(-30.0, -5.0), Point::new(30.0, -5.0), Point::new(35.0, 0.0)]);
        ObstacleWorld::new(vec![sq, wall], Point::new(0.0, 0.0), Pose::default()).unwrap()
    }

    #[test]
    fn far_and_on_vertex() {
        let w = square_world();
        assert!(!collision_check(&w, &Pose::new(-100.0, 100.0, 0.0), 2.0));
        assert!(collision_check(&w, &Pose::new(10.0, 10.0, 0.0), 0.5));
        assert!(collision_check(&w, &Pose::new(30.0, -5.0, 1.0), 0.1));
    }

    // Oracle: minimum over endpoint distances and perpendicular feet that fall inside the segment.
    fn oracle_distance(a: Point, b: Point, p: Point) -> f64 {
        let mut best = ((p.x - a.x).powi(2) + (p.y - a.y).powi(2))
            .sqrt()
            .min(((p.x - b.x).powi(2) + (p.y - b.y).powi(2)).sqrt());
        let (ex, ey) = (b.x - a.x, b.y - a.y);
        let l2 = ex * ex + ey * ey;
        if l2 > 0.0 {
            let t = ((p.x - a.x) * ex + (p.y - a.y) * ey) / l2;
            if (0.0..=1.0).contains(&t) {
                let perp = ((p.x - a.x) * ey - (p.y - a.y) * ex).abs() / l2.sqrt();
                best = best.min(perp);
            }
        }
        best
    }

    #[test]
    fn random_poses_match_distance_oracle() {
        let w = square_world();
        let mut rng = SeededRng::new(11);
        for _ in 0..5000 {
            let p = Point::new(rng.uniform(-40.0, 40.0), rng.uniform(-20.0, 30.0));
            let r = rng.uniform(0.1, 6.0);
            let expected = w.segments().iter().any(|s| oracle_distance(s.a, s.b, p) <= r);
            let d_min = w.segments().iter().map(|s| oracle_distance(s.a, s.b, p)).fold(f64::INFINITY, f64::min);
            if (d_min - r).abs() < 1e-9 {
                continue;
            }
            assert_eq!(collision_check(&w, &Pose::new(p.x, p.y, 0.0), r), expected);
        }
    }
}
