//! SVG rendering of point sets colored by a signed value.

use std::fmt::Write;

use crate::curve::Point;
use crate::error::{Error, Result};

const WIDTH: f64 = 480.0;
const PLOT: f64 = 400.0;
const MARGIN: f64 = 20.0;

/// Diverging map: `−1` blue, `0` white, `+1` red. Inputs are clamped to `[−1, 1]`.
pub fn diverging_color(t: f64) -> [u8; 3] {
    let t = if t.is_nan() { 0.0 } else { t.clamp(-1.0, 1.0) };
    let fade = |s: f64| (255.0 * (1.0 - s)).round() as u8;
    if t >= 0.0 {
        [255, fade(t), fade(t)]
    } else {
        [fade(-t), fade(-t), 255]
    }
}

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Draws `points` as filled circles colored by `values / max|values|`, with a legend bar
/// labelled `−max`, `0`, `max`. Output depends only on the inputs.
pub fn render_svg(points: &[Point], values: &[f64]) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    if points.len() != values.len() {
        return Err(Error::invalid(
            "render_svg",
            format!("{} points but {} values", points.len(), values.len()),
        ));
    }
    if values
        .iter()
        .chain(points.iter().flatten())
        .any(|v| !v.is_finite())
    {
        return Err(Error::invalid(
            "render_svg",
            "values and coordinates must be finite",
        ));
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for [x, y] in points {
        xmin = xmin.min(*x);
        xmax = xmax.max(*x);
        ymin = ymin.min(*y);
        ymax = ymax.max(*y);
    }
    let span = (xmax - xmin).max(ymax - ymin).max(1e-12);
    let zoom = PLOT / span;
    let cx = (xmin + xmax) / 2.0;
    let cy = (ymin + ymax) / 2.0;
    let radius = (PLOT / (points.len() as f64).sqrt() / 6.0).clamp(1.5, 8.0);

    let mut svg = String::new();
    let height = PLOT + 2.0 * MARGIN;
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    )
    .unwrap();
    writeln!(
        svg,
        r##"<defs><linearGradient id="legend" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="#0000ff"/><stop offset="0.5" stop-color="#ffffff"/><stop offset="1" stop-color="#ff0000"/></linearGradient></defs>"##
    )
    .unwrap();
    writeln!(
        svg,
        r##"<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="#f4f4f4"/>"##
    )
    .unwrap();
    svg.push_str("<g stroke=\"#404040\" stroke-width=\"0.3\">\n");
    for ([x, y], v) in points.iter().zip(values) {
        let px = MARGIN + PLOT / 2.0 + (x - cx) * zoom;
        let py = MARGIN + PLOT / 2.0 - (y - cy) * zoom;
        let t = if scale > 0.0 { v / scale } else { 0.0 };
        writeln!(
            svg,
            r#"<circle cx="{px:.3}" cy="{py:.3}" r="{radius:.2}" fill="{}"/>"#,
            hex(diverging_color(t))
        )
        .unwrap();
    }
    svg.push_str("</g>\n");

    let bar_x = MARGIN + PLOT + 12.0;
    writeln!(
        svg,
        r##"<rect x="{bar_x}" y="{MARGIN}" width="12" height="{PLOT}" fill="url(#legend)" stroke="#404040" stroke-width="0.5"/>"##
    )
    .unwrap();
    for (label, y) in [
        (scale, MARGIN + 4.0),
        (0.0, MARGIN + PLOT / 2.0 + 3.0),
        (-scale, MARGIN + PLOT),
    ] {
        writeln!(
            svg,
            r#"<text x="{}" y="{y}" font-family="monospace" font-size="8">{}</text>"#,
            bar_x + 14.0,
            format_label(label)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_label(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.3e}")
    }
}
