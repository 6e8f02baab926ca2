//! Planar points and segments.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rotates about `center` by `angle` (counter-clockwise).
    pub fn rotate_about(self, center: Point, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        let d = self.sub(center);
        Point::new(center.x + c * d.x - s * d.y, center.y + s * d.x + c * d.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(p: [f64; 2]) -> Self {
        Point::new(p[0], p[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

impl Segment {
    pub fn new(a: Point, b: Point) -> Self {
        Self { a, b }
    }

    /// Euclidean distance from `p` to the closest point of the segment.
    pub fn distance_to(&self, p: Point) -> f64 {
        let e = self.b.sub(self.a);
        let len2 = e.dot(e);
        let t = if len2 > 0.0 { (p.sub(self.a).dot(e) / len2).clamp(0.0, 1.0) } else { 0.0 };
        p.distance(self.a.add(e.scale(t)))
    }

    /// Distance along the unit direction `dir` from `origin` to the first
    /// point of this segment, if the ray hits it at a strictly positive distance.
    pub fn ray_hit(&self, origin: Point, dir: Point) -> Option<f64> {
        let e = self.b.sub(self.a);
        let ao = self.a.sub(origin);
        let denom = dir.cross(e);
        if denom.abs() <= 1e-12 * e.norm() {
            // Parallel; only a collinear overlap can be hit.
            if ao.cross(dir).abs() > 1e-9 * (1.0 + ao.norm()) {
                return None;
            }
            let ta = ao.dot(dir);
            let tb = self.b.sub(origin).dot(dir);
            // An origin lying on the segment itself is not a hit.
            let near = ta.min(tb);
            return (near > 0.0).then_some(near);
        }
        let t = ao.cross(e) / denom;
        let s = ao.cross(dir) / denom;
        if t > 0.0 && (0.0..=1.0).contains(&s) {
            Some(t)
        } else {
            None
        }
    }

    /// True when the two closed segments share at least one point.
    pub fn intersects(&self, other: &Segment) -> bool {
        fn orient(a: Point, b: Point, c: Point) -> f64 {
            b.sub(a).cross(c.sub(a))
        }
        fn on_segment(a: Point, b: Point, p: Point) -> bool {
            p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
        }
        let (p1, p2, p3, p4) = (self.a, self.b, other.a, other.b);
        let d1 = orient(p3, p4, p1);
        let d2 = orient(p3, p4, p2);
        let d3 = orient(p1, p2, p3);
        let d4 = orient(p1, p2, p4);
        if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
            return true;
        }
        (d1 == 0.0 && on_segment(p3, p4, p1))
            || (d2 == 0.0 && on_segment(p3, p4, p2))
            || (d3 == 0.0 && on_segment(p1, p2, p3))
            || (d4 == 0.0 && on_segment(p1, p2, p4))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_cases() {
        let s = Segment::new(Point::new(0.0, 0.0), Point::new(10.0, 0.0));
        assert_eq!(s.distance_to(Point::new(5.0, 3.0)), 3.0);
        assert_eq!(s.distance_to(Point::new(-3.0, 4.0)), 5.0);
        assert_eq!(s.distance_to(Point::new(10.0, 0.0)), 0.0);
        let degenerate = Segment::new(Point::new(1.0, 1.0), Point::new(1.0, 1.0));
        assert_eq!(degenerate.distance_to(Point::new(4.0, 5.0)), 5.0);
    }

    #[test]
    fn ray_hits() {
        let wall = Segment::new(Point::new(10.0, -5.0), Point::new(10.0, 5.0));
        assert_eq!(wall.ray_hit(Point::new(0.0, 0.0), Point::new(1.0, 0.0)), Some(10.0));
        assert_eq!(wall.ray_hit(Point::new(0.0, 0.0), Point::new(-1.0, 0.0)), None);
        assert_eq!(wall.ray_hit(Point::new(0.0, 0.0), Point::new(0.0, 1.0)), None);
        let collinear = Segment::new(Point::new(3.0, 0.0), Point::new(8.0, 0.0));
        assert_eq!(collinear.ray_hit(Point::new(0.0, 0.0), Point::new(1.0, 0.0)), Some(3.0));
    }

    #[test]
    fn segment_intersection() {
        let a = Segment::new(Point::new(0.0, 0.0), Point::new(2.0, 2.0));
        let b = Segment::new(Point::new(0.0, 2.0), Point::new(2.0, 0.0));
        let c = Segment::new(Point::new(3.0, 0.0), Point::new(4.0, 0.0));
        let touching = Segment::new(Point::new(2.0, 2.0), Point::new(3.0, 5.0));
        assert!(a.intersects(&b));
        assert!(!a.intersects(&c));
        assert!(a.intersects(&touching));
    }
}
