//! Marine-radar style PPI rasterization of point detections.
//!
//! Every detection is painted as an ellipse whose axes grow with range and
//! whose major axis points along the line of sight from the radar; the frame
//! is the pixelwise maximum of all ellipse indicators.

mod export;
mod raster;

pub use export::{read_pgm, write_pgm, write_png, RadarMetadata};
pub use raster::{normalize_points, point_geometry, psf_axes, rasterize, Normalized, PointGeometry};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RadarError {
    #[error("no points to normalize")]
    EmptyInput,
    #[error("invalid radar configuration: {0}")]
    InvalidConfig(String),
    #[error("frame has no extent metadata")]
    MissingExtent,
    #[error("malformed raster file: {0}")]
    Format(String),
}

/// Smallest extent per axis (m) used when all points share a coordinate.
pub const MIN_EXTENT: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtentMode {
    /// Bounding box of the detections, mapped onto the raster.
    PaperNormalized,
    /// Radar-centred square of side `2·max_range`.
    FixedMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadarConfig {
    pub image_size: usize,
    /// Horizontal beam width (rad).
    pub alpha: f64,
    /// Range-resolution scalar (rad), tuned by hand.
    pub beta: f64,
    pub max_range: f64,
    pub rotation_rpm: f64,
    pub extent_mode: ExtentMode,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            image_size: 512,
            alpha: 2f64.to_radians(),
            // b ≈ 2 px at half range for G = 512 over a 10 km square.
            beta: 0.5927,
            max_range: 5000.0,
            rotation_rpm: 36.0,
            extent_mode: ExtentMode::FixedMetric,
        }
    }
}

impl RadarConfig {
    pub fn validate(&self) -> Result<(), RadarError> {
        let bad = |m: &str| Err(RadarError::InvalidConfig(m.to_string()));
        let pi = std::f64::consts::PI;
        if self.image_size < 2 {
            return bad("image_size must be >= 2");
        }
        if !(self.alpha > 0.0 && self.alpha < pi) || !(self.beta > 0.0 && self.beta < pi) {
            return bad("alpha and beta must lie in (0, π)");
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return bad("max_range must be positive");
        }
        if !(self.rotation_rpm > 0.0 && self.rotation_rpm.is_finite()) {
            return bad("rotation_rpm must be positive");
        }
        Ok(())
    }

    /// Time between frames: one antenna revolution.
    pub fn frame_period(&self) -> f64 {
        60.0 / self.rotation_rpm
    }
}

/// Metric bounds of a raster: `[x_min, x_min + width] × [y_min, y_min + height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterExtent {
    pub x_min: f64,
    pub y_min: f64,
    pub width: f64,
    pub height: f64,
}

/// Square binary raster. `pixels[y·size + x]`, with `y` growing with world y.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarFrame {
    pub size: usize,
    pub pixels: Vec<u8>,
    pub extent: Option<RasterExtent>,
    pub radar_pixel: [i64; 2],
    pub timestamp: f64,
}

impl RadarFrame {
    pub fn blank(size: usize, extent: Option<RasterExtent>, radar_pixel: [i64; 2]) -> Self {
        Self { size, pixels: vec![0; size * size], extent, radar_pixel, timestamp: 0.0 }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.size + x]
    }

    pub fn set(&mut self, x: usize, y: usize) {
        self.pixels[y * self.size + x] = 1;
    }

    pub fn count_set(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    /// Set pixels as `(x, y)` indices in raster order.
    pub fn set_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pixels
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0)
            .map(|(i, _)| (i % self.size, i / self.size))
    }

    /// Metric position of a pixel center.
    pub fn pixel_center(&self, x: usize, y: usize) -> Result<Point, RadarError> {
        let e = self.extent.ok_or(RadarError::MissingExtent)?;
        let g = self.size as f64;
        Ok(Point::new(
            e.x_min + (x as f64 + 0.5) / g * e.width,
            e.y_min + (y as f64 + 0.5) / g * e.height,
        ))
    }
}
