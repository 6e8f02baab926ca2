use std::fmt::Write as _;
use std::io::Write;

use super::{ChannelLayout, Obstacle, ObstacleWorld};
use crate::geometry::Point;

/// CSV with one row per vertex: `polyline,kind,index,x,y`.
///
/// Kinds are `left`, `right`, `center`, `polygon` and `polyline`.
pub fn write_preview_csv<W: Write>(
    out: W,
    layout: Option<&ChannelLayout>,
    world: &ObstacleWorld,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["polyline", "kind", "index", "x", "y"])?;
    let mut id = 0usize;
    let mut emit = |w: &mut csv::Writer<W>, kind: &str, pts: &[Point]| -> csv::Result<()> {
        for (i, p) in pts.iter().enumerate() {
            w.write_record([id.to_string(), kind.to_string(), i.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        id += 1;
        Ok(())
    };
    if let Some(l) = layout {
        emit(&mut w, "center", &l.centerline)?;
    }
    for o in world.obstacles() {
        let kind = match (o, layout) {
            (Obstacle::Polyline(p), Some(l)) if *p == l.left_bank => "left",
            (Obstacle::Polyline(p), Some(l)) if *p == l.right_bank => "right",
            (Obstacle::Polyline(_), _) => "polyline",
            (Obstacle::Polygon(_), _) => "polygon",
        };
        emit(&mut w, kind, o.points())?;
    }
    w.flush()?;
    Ok(())
}

fn bounds(world: &ObstacleWorld, layout: Option<&ChannelLayout>) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    let extra = [world.goal, Point::new(world.spawn.x, world.spawn.y)];
    let center = layout.map(|l| l.centerline.as_slice()).unwrap_or(&[]);
    for p in world.obstacles().iter().flat_map(|o| o.points()).chain(extra.iter()).chain(center) {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (lo, hi)
}

fn path(pts: &[Point], flip: f64) -> String {
    let mut s = String::new();
    for p in pts {
        let _ = write!(s, "{:.3},{:.3} ", p.x, flip - p.y);
    }
    s.trim_end().to_string()
}

/// Minimal SVG: one `<polygon class="section">` per channel section, the
/// banks, obstacles, spawn and goal. World y points up.
pub fn write_preview_svg<W: Write>(
    mut out: W,
    layout: Option<&ChannelLayout>,
    world: &ObstacleWorld,
) -> std::io::Result<()> {
    let (lo, hi) = bounds(world, layout);
    let margin = 10.0;
    let (x0, y0) = (lo.x - margin, lo.y - margin);
    let (w, h) = (hi.x - lo.x + 2.0 * margin, hi.y - lo.y + 2.0 * margin);
    // Mirror y about the box so north is up.
    let flip = lo.y + hi.y;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.3} {y0:.3} {w:.3} {h:.3}">"#
    )?;
    if let Some(l) = layout {
        for i in 0..l.n_sections() {
            writeln!(
                out,
                r##"  <polygon class="section" points="{}" fill="#cfe3f5" stroke="none"/>"##,
                path(&l.section(i), flip)
            )?;
        }
        writeln!(
            out,
            r##"  <polyline class="center" points="{}" fill="none" stroke="#7a9" stroke-dasharray="2"/>"##,
            path(&l.centerline, flip)
        )?;
    }
    for o in world.obstacles() {
        let (tag, fill) = match o {
            Obstacle::Polygon(_) => ("polygon", "#8a6"),
            Obstacle::Polyline(_) => ("polyline", "none"),
        };
        writeln!(
            out,
            r##"  <{tag} class="obstacle" points="{}" fill="{fill}" stroke="#333"/>"##,
            path(o.points(), flip)
        )?;
    }
    writeln!(
        out,
        r##"  <circle class="spawn" cx="{:.3}" cy="{:.3}" r="2" fill="#36c"/>"##,
        world.spawn.x,
        flip - world.spawn.y
    )?;
    writeln!(
        out,
        r##"  <circle class="goal" cx="{:.3}" cy="{:.3}" r="2" fill="#a3c"/>"##,
        world.goal.x,
        flip - world.goal.y
    )?;
    writeln!(out, "</svg>")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::PcgParams;

    #[test]
    fn svg_has_one_polygon_per_section() {
        let l = ChannelLayout::generate(&PcgParams { n_segments: 5, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_preview_svg(&mut buf, Some(&l), &l.to_world()).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.matches(r#"class="section""#).count(), 5);
    }

    #[test]
    fn csv_lists_every_vertex() {
        let l = ChannelLayout::generate(&PcgParams { n_segments: 3, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_preview_csv(&mut buf, Some(&l), &l.to_world()).unwrap();
        let s = String::from_utf8(buf).unwrap();
        // header + 3 polylines × 4 vertices
        assert_eq!(s.lines().count(), 1 + 12);
        assert!(s.contains(",left,") && s.contains(",right,") && s.contains(",center,"));
    }
}
