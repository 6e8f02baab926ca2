use super::{ExtentMode, RadarConfig, RadarError, RadarFrame, RasterExtent, MIN_EXTENT};
use crate::geometry::Point;

/// Detections mapped to pixel coordinates, with the affine map that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub pixels: Vec<[i64; 2]>,
    pub radar_pixel: [i64; 2],
    pub p_min: Point,
    /// `Δp = p_max − p_min` per axis.
    pub delta: Point,
    pub size: usize,
}

impl Normalized {
    pub fn extent(&self) -> RasterExtent {
        RasterExtent { x_min: self.p_min.x, y_min: self.p_min.y, width: self.delta.x, height: self.delta.y }
    }
}

fn to_pixel(p: Point, p_min: Point, delta: Point, g: usize) -> [i64; 2] {
    let gf = g as f64;
    let hi = g as i64 - 1;
    let px = (((p.x - p_min.x) / delta.x) * gf).floor() as i64;
    let py = (((p.y - p_min.y) / delta.y) * gf).floor() as i64;
    [px.clamp(0, hi), py.clamp(0, hi)]
}

/// `p′ = ⌊(p − p_min)/Δp · G⌋`, clamped into the raster.
///
/// In paper-normalized mode `p_min`/`Δp` come from the detections' bounding
/// box; an axis narrower than [`MIN_EXTENT`] is widened symmetrically to it.
/// In fixed-metric mode the box is the radar-centred square of side
/// `2·max_range`. The radar position goes through the same map.
pub fn normalize_points(
    points: &[Point],
    radar: Point,
    size: usize,
    mode: ExtentMode,
    max_range: f64,
) -> Result<Normalized, RadarError> {
    let (p_min, delta) = match mode {
        ExtentMode::PaperNormalized => {
            let first = *points.first().ok_or(RadarError::EmptyInput)?;
            let (mut lo, mut hi) = (first, first);
            for p in points {
                lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
                hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            }
            let axis = |lo: f64, hi: f64| {
                let d = hi - lo;
                if d < MIN_EXTENT {
                    ((lo + hi) / 2.0 - MIN_EXTENT / 2.0, MIN_EXTENT)
                } else {
                    (lo, d)
                }
            };
            let (x0, dx) = axis(lo.x, hi.x);
            let (y0, dy) = axis(lo.y, hi.y);
            (Point::new(x0, y0), Point::new(dx, dy))
        }
        ExtentMode::FixedMetric => (
            Point::new(radar.x - max_range, radar.y - max_range),
            Point::new(2.0 * max_range, 2.0 * max_range),
        ),
    };
    Ok(Normalized {
        pixels: points.iter().map(|&p| to_pixel(p, p_min, delta, size)).collect(),
        radar_pixel: to_pixel(radar, p_min, delta, size),
        p_min,
        delta,
        size,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointGeometry {
    /// Direction vector from the radar pixel to the point.
    pub d: [f64; 2],
    pub range: f64,
    /// Line-of-sight angle; 0 when the point coincides with the radar.
    pub theta: f64,
}

pub fn point_geometry(p: [i64; 2], radar: [i64; 2]) -> PointGeometry {
    let d = [(p[0] - radar[0]) as f64, (p[1] - radar[1]) as f64];
    let range = (d[0] * d[0] + d[1] * d[1]).sqrt();
    let theta = if range == 0.0 { 0.0 } else { d[1].atan2(d[0]) };
    PointGeometry { d, range, theta }
}

/// Semi-axes `a = r·tan(α/2)·G/Δp_x` (along the line of sight) and
/// `b = r·tan(β/2)·G/Δp_y`.
pub fn psf_axes(range: f64, alpha: f64, beta: f64, delta: Point, size: usize) -> (f64, f64) {
    let g = size as f64;
    (range * (alpha / 2.0).tan() * g / delta.x, range * (beta / 2.0).tan() * g / delta.y)
}

/// Smallest semi-axis (pixels) for which the ellipse indicator is evaluated.
const MIN_AXIS: f64 = 0.5;

/// Renders detections into a binary PPI frame.
///
/// Each detection always sets its own pixel. When both semi-axes are at
/// least half a pixel, every pixel with `x_r²/a² + y_r²/b² ≤ 1` is set too;
/// the search is confined to the ellipse's padded bounding box.
pub fn rasterize(points: &[Point], radar: Point, config: &RadarConfig) -> Result<RadarFrame, RadarError> {
    config.validate()?;
    let g = config.image_size;
    let n = normalize_points(points, radar, g, config.extent_mode, config.max_range)?;
    let mut frame = RadarFrame::blank(g, Some(n.extent()), n.radar_pixel);
    let hi = g as i64 - 1;

    for &p in &n.pixels {
        frame.set(p[0] as usize, p[1] as usize);
        let geo = point_geometry(p, n.radar_pixel);
        let (a, b) = psf_axes(geo.range, config.alpha, config.beta, n.delta, g);
        if a < MIN_AXIS || b < MIN_AXIS {
            continue;
        }
        let (s, c) = geo.theta.sin_cos();
        let ex = (a * a * c * c + b * b * s * s).sqrt();
        let ey = (a * a * s * s + b * b * c * c).sqrt();
        let x_lo = ((p[0] as f64 - ex).floor() as i64 - 1).max(0);
        let x_hi = ((p[0] as f64 + ex).ceil() as i64 + 1).min(hi);
        let y_lo = ((p[1] as f64 - ey).floor() as i64 - 1).max(0);
        let y_hi = ((p[1] as f64 + ey).ceil() as i64 + 1).min(hi);
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                if ellipse_indicator(x, y, p, geo.theta, a, b) {
                    frame.set(x as usize, y as usize);
                }
            }
        }
    }
    Ok(frame)
}

fn ellipse_indicator(x: i64, y: i64, p: [i64; 2], theta: f64, a: f64, b: f64) -> bool {
    let x_c = (x - p[0]) as f64;
    let y_c = (y - p[1]) as f64;
    let x_r = x_c * theta.cos() + y_c * theta.sin();
    let y_r = -x_c * theta.sin() + y_c * theta.cos();
    (x_r * x_r) / (a * a) + (y_r * y_r) / (b * b) <= 1.0
}
