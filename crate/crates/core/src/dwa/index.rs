use std::collections::HashMap;

use crate::geometry::Point;

/// Uniform-grid index answering exact nearest-point distance queries.
#[derive(Debug, Clone)]
pub struct ObstacleIndex {
    cell: f64,
    cells: HashMap<(i64, i64), Vec<Point>>,
    bounds: Option<[i64; 4]>,
}

impl ObstacleIndex {
    pub fn new(points: &[Point], cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let mut cells: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
        let mut bounds: Option<[i64; 4]> = None;
        for p in points.iter().filter(|p| p.is_finite()) {
            let key = ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
            cells.entry(key).or_default().push(*p);
            bounds = Some(match bounds {
                None => [key.0, key.0, key.1, key.1],
                Some([a, b, c, d]) => [a.min(key.0), b.max(key.0), c.min(key.1), d.max(key.1)],
            });
        }
        Self { cell, cells, bounds }
    }

    pub fn len(&self) -> usize {
        self.cells.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Euclidean distance to the nearest indexed point, `+∞` when empty.
    pub fn nearest_distance(&self, q: Point) -> f64 {
        let Some([x0, x1, y0, y1]) = self.bounds else {
            return f64::INFINITY;
        };
        let cx = (q.x / self.cell).floor() as i64;
        let cy = (q.y / self.cell).floor() as i64;
        // Rings beyond this radius contain no cells.
        let max_ring = [cx - x0, x1 - cx, cy - y0, y1 - cy].into_iter().map(i64::abs).max().unwrap_or(0)
            + (x1 - x0).max(y1 - y0)
            + 1;
        let mut best = f64::INFINITY;
        let visit = |key: (i64, i64), best: &mut f64| {
            if let Some(pts) = self.cells.get(&key) {
                for p in pts {
                    *best = best.min(q.distance(*p));
                }
            }
        };
        for k in 0..=max_ring {
            if k == 0 {
                visit((cx, cy), &mut best);
            } else {
                for dx in -k..=k {
                    visit((cx + dx, cy - k), &mut best);
                    visit((cx + dx, cy + k), &mut best);
                }
                for dy in (-k + 1)..k {
                    visit((cx - k, cy + dy), &mut best);
                    visit((cx + k, cy + dy), &mut best);
                }
            }
            // Anything in ring k+1 or beyond is at least k cells away.
            if best <= k as f64 * self.cell {
                break;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_index() {
        let idx = ObstacleIndex::new(&[], 2.0);
        assert!(idx.is_empty());
        assert_eq!(idx.nearest_distance(Point::new(1.0, 1.0)), f64::INFINITY);
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            pts in prop::collection::vec((-200.0..200.0f64, -200.0..200.0f64), 1..60),
            q in (-300.0..300.0f64, -300.0..300.0f64),
            cell in 0.5..20.0f64,
        ) {
            let pts: Vec<Point> = pts.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            let q = Point::new(q.0, q.1);
            let brute = pts.iter().map(|p| q.distance(*p)).fold(f64::INFINITY, f64::min);
            let idx = ObstacleIndex::new(&pts, cell);
            prop_assert_eq!(idx.nearest_distance(q), brute);
            prop_assert_eq!(idx.len(), pts.len());
        }
    }
}
