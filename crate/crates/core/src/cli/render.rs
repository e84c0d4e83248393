//! SVG overlay of a cuboid, its edge families and their vanishing points.

use std::fmt::Write as _;
use std::io::Cursor;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use image::ImageFormat;

use crate::cuboid::{direction_edges, Cuboid2D, Direction, Frame};
use crate::projective::{line_through, lines_intersection, Point2};

use super::CliError;

/// Background raster, already re-encoded as PNG.
pub struct Background {
    pub width: u32,
    pub height: u32,
    pub png: Vec<u8>,
}

/// Decodes a binary or ASCII PPM and re-encodes it as PNG for embedding.
pub fn load_ppm(bytes: &[u8]) -> Result<Background, CliError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)
        .map_err(|e| CliError::Validation(format!("cannot decode PPM: {e}")))?
        .to_rgb8();
    let mut png = Vec::new();
    img.write_to(&mut Cursor::new(&mut png), ImageFormat::Png)
        .map_err(|e| CliError::Io(format!("cannot encode background: {e}")))?;
    Ok(Background {
        width: img.width(),
        height: img.height(),
        png,
    })
}

fn color(d: Direction) -> &'static str {
    match d {
        Direction::F => "#d62728",
        Direction::R => "#2ca02c",
        Direction::S => "#1f77b4",
    }
}

/// Intersection of the first pair of non-parallel edges of a direction.
pub fn estimated_vanishing_point(c: &Cuboid2D, d: Direction) -> Option<Point2> {
    let edges = direction_edges(d).edges;
    let lines: Vec<_> = edges
        .iter()
        .filter_map(|&(i, j)| line_through(c.vertex(i), c.vertex(j)).ok())
        .collect();
    for a in 0..lines.len() {
        for b in a + 1..lines.len() {
            if let Ok(p) = lines_intersection(&lines[a], &lines[b]) {
                return Some(p);
            }
        }
    }
    None
}

pub fn render_svg(c: &Cuboid2D, background: Option<&Background>) -> Result<String, CliError> {
    if c.frame() != Frame::Image {
        return Err(CliError::Validation("render needs an image-frame cuboid".into()));
    }
    let vps: Vec<(Direction, Option<Point2>)> = Direction::ALL
        .iter()
        .map(|&d| (d, estimated_vanishing_point(c, d)))
        .collect();

    let (x0, y0, w, h) = match background {
        Some(bg) => (0.0, 0.0, bg.width as f64, bg.height as f64),
        None => {
            let pts = c.vertices();
            let lo_x = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let hi_x = pts.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let lo_y = pts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
            let hi_y = pts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
            let mut bounds = (lo_x, lo_y, hi_x, hi_y);
            let span = (hi_x - lo_x).max(hi_y - lo_y).max(1.0);
            // pull in vanishing points that are reasonably close
            for (_, vp) in &vps {
                if let Some(p) = vp {
                    if (p.x - (lo_x + hi_x) / 2.0).abs() < 3.0 * span
                        && (p.y - (lo_y + hi_y) / 2.0).abs() < 3.0 * span
                    {
                        bounds.0 = bounds.0.min(p.x);
                        bounds.1 = bounds.1.min(p.y);
                        bounds.2 = bounds.2.max(p.x);
                        bounds.3 = bounds.3.max(p.y);
                    }
                }
            }
            let margin = 0.1 * span;
            (
                bounds.0 - margin,
                bounds.1 - margin,
                bounds.2 - bounds.0 + 2.0 * margin,
                bounds.3 - bounds.1 + 2.0 * margin,
            )
        }
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.3} {y0:.3} {w:.3} {h:.3}" width="{w:.0}" height="{h:.0}">"#
    );
    if let Some(bg) = background {
        let _ = writeln!(
            s,
            r#"  <image x="0" y="0" width="{}" height="{}" href="data:image/png;base64,{}"/>"#,
            bg.width,
            bg.height,
            STANDARD.encode(&bg.png)
        );
    }
    for (d, vp) in &vps {
        let stroke = color(*d);
        let _ = writeln!(s, r#"  <g id="edges-{}" stroke="{stroke}" stroke-width="2">"#, d.name());
        for (i, j) in direction_edges(*d).edges {
            let (a, b) = (c.vertex(i), c.vertex(j));
            let _ = writeln!(
                s,
                r#"    <line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                a.x, a.y, b.x, b.y
            );
            if let Some(p) = vp {
                let near = if a.distance(*p) < b.distance(*p) { a } else { b };
                let _ = writeln!(
                    s,
                    r#"    <line x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke-width="1" stroke-dasharray="4 3" opacity="0.6"/>"#,
                    near.x, near.y, p.x, p.y
                );
            }
        }
        s.push_str("  </g>\n");
        match vp {
            Some(p) => {
                let _ = writeln!(
                    s,
                    r#"  <circle class="vp" cx="{:.3}" cy="{:.3}" r="4" fill="{stroke}"/>"#,
                    p.x, p.y
                );
                let _ = writeln!(
                    s,
                    r#"  <text x="{:.3}" y="{:.3}" fill="{stroke}" font-size="10">VP {}</text>"#,
                    p.x + 6.0,
                    p.y - 6.0,
                    d.name()
                );
            }
            None => {
                let _ = writeln!(s, r#"  <!-- VP {} at infinity -->"#, d.name());
            }
        }
    }
    for (i, p) in c.vertices().iter().enumerate() {
        let _ = writeln!(
            s,
            r#"  <circle cx="{:.3}" cy="{:.3}" r="2.5" fill="black"/><text x="{:.3}" y="{:.3}" font-size="9">{i}</text>"#,
            p.x,
            p.y,
            p.x + 3.0,
            p.y + 10.0
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
