//! Static SVG plots of planar sections.

use std::fmt::Write;

use kkit_core::bodies::{boundary_point, circle_directions, Body, BodyError};
use kkit_core::linalg::{Subspace, Vector};
use kkit_core::quadform::SymmetricForm;

pub const VIEWPORT: f64 = 800.0;
pub const SEGMENTS: usize = 512;
const MARGIN: f64 = 40.0;

/// Boundary of `B ∩ X` in frame coordinates, `SEGMENTS` points.
pub fn section_outline(body: &Body, plane: &Subspace) -> Result<Vec<Vector>, BodyError> {
    circle_directions(SEGMENTS)
        .into_iter()
        .map(|c| boundary_point(body, &plane.embed(&c)).map(|p| plane.coords(&p)))
        .collect()
}

/// The ellipse `{c : cᵀSc = 1}`, `SEGMENTS` points.
pub fn quadric_outline(form: &SymmetricForm) -> Vec<Vector> {
    let s = form.coeffs();
    circle_directions(SEGMENTS)
        .into_iter()
        .map(|c| {
            let r = c.dot(&(s * &c)).sqrt();
            c / r
        })
        .collect()
}

fn polyline(points: &[Vector], scale: f64, style: &str) -> String {
    let centre = VIEWPORT / 2.0;
    let mut d = String::new();
    for p in points.iter().chain(points.first()) {
        let _ = write!(d, "{:.3},{:.3} ", centre + scale * p[0], centre - scale * p[1]);
    }
    format!("  <polyline points=\"{}\" {style}/>\n", d.trim_end())
}

/// An 800×800 SVG with the section boundary and an optional quadric overlay.
pub fn render(outline: &[Vector], overlay: Option<&[Vector]>) -> String {
    let extent = outline
        .iter()
        .chain(overlay.unwrap_or(&[]).iter())
        .map(|p| p[0].abs().max(p[1].abs()))
        .fold(0.0, f64::max);
    let scale = if extent > 0.0 {
        (VIEWPORT / 2.0 - MARGIN) / extent
    } else {
        1.0
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{v}\" height=\"{v}\" viewBox=\"0 0 {v} {v}\">\n",
        v = VIEWPORT
    );
    let c = VIEWPORT / 2.0;
    let _ = writeln!(
        svg,
        "  <line x1=\"0\" y1=\"{c}\" x2=\"{VIEWPORT}\" y2=\"{c}\" stroke=\"#ccc\"/>\n  <line x1=\"{c}\" y1=\"0\" x2=\"{c}\" y2=\"{VIEWPORT}\" stroke=\"#ccc\"/>"
    );
    svg.push_str(&polyline(
        outline,
        scale,
        "fill=\"none\" stroke=\"black\" stroke-width=\"2\" class=\"section\"",
    ));
    if let Some(q) = overlay {
        svg.push_str(&polyline(
            q,
            scale,
            "fill=\"none\" stroke=\"red\" stroke-width=\"1\" stroke-dasharray=\"6 4\" class=\"quadric\"",
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
