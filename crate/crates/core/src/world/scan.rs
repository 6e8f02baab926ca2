use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::ObstacleWorld;
use crate::dynamics::Pose;
use crate::geometry::Point;
use crate::prng::SeededRng;

/// One planar 360° range scan.
///
/// Beam `i` points at `origin.psi + 2π·i/n_beams`. `hits[i]` is present iff
/// `ranges[i] < max_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFrame {
    pub origin: Pose,
    pub max_range: f64,
    pub ranges: Vec<f64>,
    pub hits: Vec<Option<Point>>,
    pub timestamp: f64,
}

impl ScanFrame {
    pub fn n_beams(&self) -> usize {
        self.ranges.len()
    }

    pub fn beam_angle(&self, i: usize) -> f64 {
        self.origin.psi + TAU * i as f64 / self.ranges.len() as f64
    }

    /// Hit points in beam order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.hits.iter().flatten().copied()
    }

    pub fn with_timestamp(mut self, t: f64) -> Self {
        self.timestamp = t;
        self
    }
}

/// Casts `n_beams` rays at uniform azimuth spacing and records the nearest
/// obstacle hit along each, clamped to `max_range`.
///
/// Segments are first binned by the azimuth interval they subtend from the
/// sensor, so each beam only tests the segments that can intersect it.
pub fn raycast_scan(world: &ObstacleWorld, pose: &Pose, n_beams: usize, max_range: f64) -> ScanFrame {
    let n = n_beams.max(1);
    let origin = Point::new(pose.x, pose.y);
    let spacing = TAU / n as f64;
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); n];

    for (idx, seg) in world.segments().iter().enumerate() {
        let dist = seg.distance_to(origin);
        if dist >= max_range {
            continue;
        }
        if dist < 1e-9 {
            buckets.iter_mut().for_each(|b| b.push(idx as u32));
            continue;
        }
        let rel = |p: Point| (p.y - origin.y).atan2(p.x - origin.x) - pose.psi;
        let a0 = rel(seg.a).rem_euclid(TAU);
        let a1 = rel(seg.b).rem_euclid(TAU);
        // Short arc between the endpoint azimuths; a segment not through the origin spans < π.
        let mut delta = (a1 - a0).rem_euclid(TAU);
        let start = if delta > std::f64::consts::PI {
            delta = TAU - delta;
            a1
        } else {
            a0
        };
        let first = (start / spacing).floor() as i64 - 1;
        let last = ((start + delta) / spacing).ceil() as i64 + 1;
        let count = (last - first + 1).min(n as i64);
        for k in 0..count {
            let beam = (first + k).rem_euclid(n as i64) as usize;
            buckets[beam].push(idx as u32);
        }
    }

    let segments = world.segments();
    let mut ranges = Vec::with_capacity(n);
    let mut hits = Vec::with_capacity(n);
    for (i, bucket) in buckets.iter().enumerate() {
        let angle = pose.psi + TAU * i as f64 / n as f64;
        let dir = Point::new(angle.cos(), angle.sin());
        let nearest = bucket
            .iter()
            .filter_map(|&s| segments[s as usize].ray_hit(origin, dir))
            .fold(f64::INFINITY, f64::min);
        if nearest < max_range {
            ranges.push(nearest);
            hits.push(Some(origin.add(dir.scale(nearest))));
        } else {
            ranges.push(max_range);
            hits.push(None);
        }
    }

    ScanFrame { origin: *pose, max_range, ranges, hits, timestamp: 0.0 }
}

/// Keeps each hit independently with probability `keep_fraction`.
/// Dropped beams read `max_range`.
pub fn subsample(scan: &ScanFrame, keep_fraction: f64, seed: u64) -> ScanFrame {
    let keep = keep_fraction.clamp(0.0, 1.0);
    let mut rng = SeededRng::new(seed);
    let mut out = scan.clone();
    for (range, hit) in out.ranges.iter_mut().zip(out.hits.iter_mut()) {
        if hit.is_some() && !rng.bernoulli(keep) {
            *hit = None;
            *range = scan.max_range;
        }
    }
    out
}
