use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use slowquench::surfaces::{TaspGrid, Vertex};

use crate::error::CliError;

pub const AXES: [&str; 3] = ["kx", "ky", "kz"];
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Round-trip decimal with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One TASP component on every grid node: momentum columns, then the value.
pub fn write_grid_csv(path: &Path, grid: &TaspGrid, component: usize) -> Result<(), CliError> {
    let dim = grid.zone.dim;
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = AXES[..dim].to_vec();
    header.push("value");
    w.write_record(&header)?;
    for node in 0..grid.zone.node_count() {
        let p = grid.zone.position(node);
        let mut row: Vec<String> = p[..dim].iter().map(|&x| num(x)).collect();
        row.push(num(grid.tasp_component(node, component)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Surface vertices: position, outward normal of the first-order surface,
/// and the residual of the defining scalar interpolated at the vertex.
pub fn write_vertices_csv(path: &Path, vertices: &[&Vertex], dim: usize, residual: impl Fn(&Vertex) -> f64) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = AXES[..dim].iter().map(|s| s.to_string()).collect();
    header.extend(AXES[..dim].iter().map(|s| format!("n_{s}")));
    header.push(String::from("residual"));
    w.write_record(&header)?;
    for v in vertices {
        let mut row: Vec<String> = v.position[..dim].iter().map(|&x| num(x)).collect();
        row.extend(v.normal[..dim].iter().map(|&x| num(x)));
        row.push(num(residual(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_triangles_csv(path: &Path, triangles: &[[usize; 3]]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["a", "b", "c"])?;
    for t in triangles {
        w.write_record(t.map(|i| i.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn svg_open(width: f64, height: f64) -> String {
    format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n")
}

fn diverging(v: f64, scale: f64) -> String {
    let x = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
    let fade = |c: f64| (255.0 * (1.0 - x.abs()) + c * x.abs()).round() as u8;
    let (r, g, b) = if x >= 0.0 {
        (fade(178.0), fade(24.0), fade(43.0))
    } else {
        (fade(33.0), fade(102.0), fade(172.0))
    };
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Line plot of several series sharing the horizontal axis.
pub fn line_plot(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, pad) = (720.0, 400.0, 48.0);
    let pts = series.iter().flat_map(|(_, s)| s.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x1 = x0 + 1.0;
    }
    if !(y1 > y0) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let mut out = svg_open(w, h);
    let _ = writeln!(out, "<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(out, "<text x=\"{pad}\" y=\"{}\" font-size=\"14\">{title}</text>", pad - 16.0);
    let _ = writeln!(
        out,
        "<text x=\"{pad}\" y=\"{}\" font-size=\"11\">{:.4} .. {:.4}</text>",
        h - pad + 18.0,
        x0,
        x1
    );
    let _ = writeln!(out, "<text x=\"4\" y=\"{}\" font-size=\"11\">{y1:.3}</text>", pad + 4.0);
    let _ = writeln!(out, "<text x=\"4\" y=\"{}\" font-size=\"11\">{y0:.3}</text>", h - pad);
    for (i, (name, s)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in s {
            let _ = write!(path, "{:.2},{:.2} ", sx(x), sy(y));
        }
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1\" points=\"{}\"/>",
            path.trim_end()
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{colour}\">{name}</text>",
            w - pad - 90.0,
            pad + 16.0 + 16.0 * i as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Heatmap of a node scalar on a planar zone, at most about 100 cells per
/// axis.
pub fn heatmap(title: &str, grid: &TaspGrid, value: impl Fn(usize) -> f64) -> String {
    let zone = &grid.zone;
    let m = zone.cells();
    let stride = m.div_ceil(100);
    let cells = m.div_ceil(stride);
    let side = 400.0 / cells as f64;
    let scale = (0..zone.node_count()).map(|n| value(n).abs()).fold(0.0, f64::max);
    let mut out = svg_open(440.0, 460.0);
    let _ = writeln!(out, "<rect width=\"440\" height=\"460\" fill=\"white\"/>");
    let _ = writeln!(out, "<text x=\"20\" y=\"24\" font-size=\"14\">{title} (|max| {scale:.4})</text>");
    for j in 0..cells {
        for i in 0..cells {
            let node = zone.node([(i * stride) as isize, (j * stride) as isize, 0]);
            let x = 20.0 + i as f64 * side;
            let y = 440.0 - (j + 1) as f64 * side;
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                side + 0.05,
                side + 0.05,
                diverging(value(node), scale)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Planar surfaces as polylines with arrows of a two-component field.
pub struct SurfaceLayer<'a> {
    pub colour: &'a str,
    pub curves: Vec<Vec<[f64; 2]>>,
    pub arrows: Vec<([f64; 2], [f64; 2])>,
    pub points: Vec<[f64; 2]>,
}

pub fn surface_plot(title: &str, lower: f64, layers: &[SurfaceLayer]) -> String {
    let span = 2.0 * PI;
    let to = |p: [f64; 2]| [20.0 + (p[0] - lower) / span * 400.0, 440.0 - (p[1] - lower) / span * 400.0];
    let mut out = svg_open(440.0, 460.0);
    let _ = writeln!(out, "<rect width=\"440\" height=\"460\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<rect x=\"20\" y=\"40\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"black\"/>"
    );
    let _ = writeln!(out, "<text x=\"20\" y=\"24\" font-size=\"14\">{title}</text>");
    for layer in layers {
        for curve in &layer.curves {
            let mut segment: Vec<[f64; 2]> = Vec::new();
            let flush = |seg: &mut Vec<[f64; 2]>, out: &mut String| {
                if seg.len() > 1 {
                    let pts: Vec<String> = seg.iter().map(|&p| to(p)).map(|q| format!("{:.2},{:.2}", q[0], q[1])).collect();
                    let _ = writeln!(
                        out,
                        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
                        layer.colour,
                        pts.join(" ")
                    );
                }
                seg.clear();
            };
            for &p in curve.iter().chain(curve.first()) {
                if let Some(prev) = segment.last() {
                    if (p[0] - prev[0]).abs() > PI || (p[1] - prev[1]).abs() > PI {
                        flush(&mut segment, &mut out);
                    }
                }
                segment.push(p);
            }
            flush(&mut segment, &mut out);
        }
        for &(base, dir) in &layer.arrows {
            let n = dir[0].hypot(dir[1]);
            if n == 0.0 {
                continue;
            }
            let a = to(base);
            let b = [a[0] + 14.0 * dir[0] / n, a[1] - 14.0 * dir[1] / n];
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"1\"/><circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.6\" fill=\"{}\"/>",
                a[0], a[1], b[0], b[1], layer.colour, b[0], b[1], layer.colour
            );
        }
        for &p in &layer.points {
            let q = to(p);
            let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{}\"/>", q[0], q[1], layer.colour);
        }
    }
    out.push_str("</svg>\n");
    out
}
