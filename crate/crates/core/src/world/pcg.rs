//! Seeded channel generation.
//!
//! A channel is a chain of `n_segments` trapezoidal sections along a
//! centerline. Draw order from [`SeededRng`]: the entrance width, then per
//! segment `i` its end width, its turn relative to the previous segment
//! (segments `i ≥ 1` only) and its length. Widths are drawn per segment.
//! Interior bank vertices use miter joins so each bank stays at the local
//! half-width from both adjacent centerline segments.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{Obstacle, ObstacleWorld, WorldError};
use crate::angle::wrap_angle;
use crate::dynamics::Pose;
use crate::geometry::Point;
use crate::prng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcgParams {
    pub n_segments: usize,
    pub seed: u64,
    /// `[w_min, w_max]`, full channel width in meters.
    pub width_range: [f64; 2],
    /// Turns between consecutive segments are drawn from `[−angle_max, angle_max]`.
    pub angle_max: f64,
    pub segment_length_range: [f64; 2],
}

impl Default for PcgParams {
    fn default() -> Self {
        Self {
            n_segments: 4,
            seed: 1,
            width_range: [30.0, 45.0],
            angle_max: 0.5,
            segment_length_range: [60.0, 90.0],
        }
    }
}

impl PcgParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::InvalidParams(m.to_string()));
        let [w_min, w_max] = self.width_range;
        let [l_min, l_max] = self.segment_length_range;
        if self.n_segments == 0 {
            return bad("n_segments must be >= 1");
        }
        if !(w_min.is_finite() && w_max.is_finite() && w_min > 0.0 && w_min <= w_max) {
            return bad("width_range must satisfy 0 < w_min <= w_max");
        }
        if !(self.angle_max.is_finite() && self.angle_max >= 0.0 && self.angle_max < FRAC_PI_2) {
            return bad("angle_max must lie in [0, π/2)");
        }
        if !(l_min.is_finite() && l_max.is_finite() && l_min > 0.0 && l_min <= l_max) {
            return bad("segment_length_range must satisfy 0 < l_min <= l_max");
        }
        // Miter offsets at both ends of a segment must not overlap.
        if l_min < w_max * (self.angle_max / 2.0).tan() {
            return bad("segment_length_range[0] must be >= w_max·tan(angle_max/2)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// A rectangular moored vessel placed against one bank of a channel section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MooredVessel {
    pub segment: usize,
    pub side: Side,
    /// Position of the hull center along the section, in `[0, 1]`.
    pub along: f64,
    pub length: f64,
    pub beam: f64,
    /// Clearance between the hull and the bank.
    #[serde(default = "default_gap")]
    pub gap: f64,
}

fn default_gap() -> f64 {
    1.0
}

/// Full geometry of a generated channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelLayout {
    pub params: PcgParams,
    pub centerline: Vec<Point>,
    pub half_widths: Vec<f64>,
    pub left_bank: Vec<Point>,
    pub right_bank: Vec<Point>,
}

impl ChannelLayout {
    pub fn generate(params: &PcgParams) -> Result<Self, WorldError> {
        params.validate()?;
        let mut rng = SeededRng::new(params.seed);
        let [w_min, w_max] = params.width_range;
        let [l_min, l_max] = params.segment_length_range;
        let n = params.n_segments;

        let mut half_widths = vec![rng.uniform(w_min, w_max) / 2.0];
        let mut headings = Vec::with_capacity(n);
        let mut centerline = vec![Point::new(0.0, 0.0)];
        let mut heading = 0.0;
        for i in 0..n {
            half_widths.push(rng.uniform(w_min, w_max) / 2.0);
            if i > 0 {
                heading = wrap_angle(heading + rng.uniform(-params.angle_max, params.angle_max));
            }
            let length = rng.uniform(l_min, l_max);
            let last = centerline[centerline.len() - 1];
            centerline.push(Point::new(last.x + length * heading.cos(), last.y + length * heading.sin()));
            headings.push(heading);
        }

        let mut left_bank = Vec::with_capacity(n + 1);
        let mut right_bank = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let (bisector, half_turn) = if j == 0 {
                (headings[0], 0.0)
            } else if j == n {
                (headings[n - 1], 0.0)
            } else {
                let turn = wrap_angle(headings[j] - headings[j - 1]);
                (headings[j - 1] + turn / 2.0, turn / 2.0)
            };
            let offset = half_widths[j] / half_turn.cos();
            let normal = Point::new(-bisector.sin(), bisector.cos());
            left_bank.push(centerline[j].add(normal.scale(offset)));
            right_bank.push(centerline[j].sub(normal.scale(offset)));
        }

        Ok(Self { params: *params, centerline, half_widths, left_bank, right_bank })
    }

    pub fn n_sections(&self) -> usize {
        self.centerline.len() - 1
    }

    /// Trapezoid of section `i`: left start, left end, right end, right start.
    pub fn section(&self, i: usize) -> [Point; 4] {
        [self.left_bank[i], self.left_bank[i + 1], self.right_bank[i + 1], self.right_bank[i]]
    }

    pub fn heading(&self, i: usize) -> f64 {
        let d = self.centerline[i + 1].sub(self.centerline[i]);
        d.y.atan2(d.x)
    }

    /// Banks as obstacles, spawn at the entrance, goal at the exit.
    pub fn to_world(&self) -> ObstacleWorld {
        let c0 = self.centerline[0];
        let goal = self.centerline[self.centerline.len() - 1];
        ObstacleWorld::new(
            vec![Obstacle::Polyline(self.left_bank.clone()), Obstacle::Polyline(self.right_bank.clone())],
            goal,
            Pose::new(c0.x, c0.y, self.heading(0)),
        )
        .expect("generated banks are finite polylines")
    }

    /// Rectangle outline of a moored vessel against the bank.
    pub fn moored_outline(&self, index: usize, m: &MooredVessel) -> Result<Obstacle, WorldError> {
        let bad = |r: &str| WorldError::InvalidMooring { index, reason: r.to_string() };
        if m.segment >= self.n_sections() {
            return Err(bad("segment index out of range"));
        }
        if !(0.0..=1.0).contains(&m.along) || !(m.length > 0.0 && m.beam > 0.0 && m.gap >= 0.0) {
            return Err(bad("along must be in [0,1], length/beam > 0, gap >= 0"));
        }
        let i = m.segment;
        let half = self.half_widths[i].min(self.half_widths[i + 1]);
        if m.beam + m.gap >= half {
            return Err(bad("hull does not fit between bank and centerline"));
        }
        let seg_len = self.centerline[i + 1].distance(self.centerline[i]);
        let h = m.length / 2.0;
        if h > m.along * seg_len || h > (1.0 - m.along) * seg_len {
            return Err(bad("hull extends past the end of its section"));
        }
        let heading = self.heading(i);
        let dir = Point::new(heading.cos(), heading.sin());
        let normal = match m.side {
            Side::Left => Point::new(-heading.sin(), heading.cos()),
            Side::Right => Point::new(heading.sin(), -heading.cos()),
        };
        let center = self.centerline[i].add(self.centerline[i + 1].sub(self.centerline[i]).scale(m.along));
        let outer = half - m.gap;
        let inner = outer - m.beam;
        let corners = vec![
            center.add(dir.scale(-h)).add(normal.scale(inner)),
            center.add(dir.scale(h)).add(normal.scale(inner)),
            center.add(dir.scale(h)).add(normal.scale(outer)),
            center.add(dir.scale(-h)).add(normal.scale(outer)),
        ];
        Ok(Obstacle::Polygon(corners))
    }

    /// Channel world with moored vessels added.
    pub fn to_world_with_moorings(&self, moorings: &[MooredVessel]) -> Result<ObstacleWorld, WorldError> {
        let hulls = moorings
            .iter()
            .enumerate()
            .map(|(i, m)| self.moored_outline(i, m))
            .collect::<Result<Vec<_>, _>>()?;
        self.to_world().with_obstacles(hulls)
    }
}

pub fn generate_channel(params: &PcgParams) -> Result<ObstacleWorld, WorldError> {
    Ok(ChannelLayout::generate(params)?.to_world())
}
