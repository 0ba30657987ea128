//! Static drawings of planar configurations, a coordinate table for other
//! dimensions, and a convergence plot for traces.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{GhwpError, Result};
use crate::geometry::ConvexSet;
use crate::io::write_atomic;
use crate::point::Point;
use crate::problem::{Configuration, Problem};
use crate::solver::TraceRecord;

const CANVAS: f64 = 800.0;
const PAD: f64 = 40.0;

/// Maps problem coordinates onto the canvas, flipping the vertical axis.
struct Frame {
    min: [f64; 2],
    scale: f64,
    height: f64,
}

impl Frame {
    fn fit(lo: [f64; 2], hi: [f64; 2]) -> Frame {
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-9);
        let scale = (CANVAS - 2.0 * PAD) / span;
        let height = (hi[1] - lo[1]) * scale + 2.0 * PAD;
        Frame {
            min: lo,
            scale,
            height,
        }
    }

    fn x(&self, v: f64) -> f64 {
        PAD + (v - self.min[0]) * self.scale
    }

    fn y(&self, v: f64) -> f64 {
        self.height - PAD - (v - self.min[1]) * self.scale
    }

    fn len(&self, v: f64) -> f64 {
        v * self.scale
    }
}

fn extend(lo: &mut [f64; 2], hi: &mut [f64; 2], p: [f64; 2]) {
    for d in 0..2 {
        lo[d] = lo[d].min(p[d]);
        hi[d] = hi[d].max(p[d]);
    }
}

fn xy(p: &Point) -> [f64; 2] {
    [p[0], p[1]]
}

/// SVG document showing every set outline, the closed chain, the hub
/// connections with positive weight and labelled points.
pub fn render_svg_string(p: &Problem, u: &Configuration) -> Result<String> {
    if p.dim() != 2 {
        return Err(GhwpError::UnsupportedDimension(p.dim()));
    }
    p.check_config(u)?;

    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for q in u.blocks() {
        extend(&mut lo, &mut hi, xy(q));
    }
    let sets: Vec<&ConvexSet> = p
        .chain_sets()
        .iter()
        .chain(std::iter::once(p.hub_set()))
        .collect();
    for s in &sets {
        match s {
            ConvexSet::Ball { center, radius } => {
                extend(&mut lo, &mut hi, [center[0] - radius, center[1] - radius]);
                extend(&mut lo, &mut hi, [center[0] + radius, center[1] + radius]);
            }
            ConvexSet::Box {
                center,
                half_widths,
            } => {
                extend(
                    &mut lo,
                    &mut hi,
                    [center[0] - half_widths[0], center[1] - half_widths[1]],
                );
                extend(
                    &mut lo,
                    &mut hi,
                    [center[0] + half_widths[0], center[1] + half_widths[1]],
                );
            }
            ConvexSet::Singleton { point } => extend(&mut lo, &mut hi, xy(point)),
            ConvexSet::HalfSpace { .. } => {}
        }
    }
    let margin = 0.05 * (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
    lo = [lo[0] - margin, lo[1] - margin];
    hi = [hi[0] + margin, hi[1] + margin];
    let f = Frame::fit(lo, hi);
    let width = (hi[0] - lo[0]) * f.scale + 2.0 * PAD;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.2}" height="{:.2}" viewBox="0 0 {width:.2} {:.2}">"#,
        f.height, f.height
    );
    svg.push_str(
        "<style>.set{fill:#eef3fb;stroke:#4a6fa5;stroke-width:1.5}\
         .hub-set{fill:#fbf1e6;stroke:#c27c2c;stroke-width:1.5}\
         .chain{fill:none;stroke:#1b1b1b;stroke-width:2}\
         .hub-ray{stroke:#c23b22;stroke-width:1.2;stroke-dasharray:6 3}\
         .point{fill:#1b1b1b}.hub{fill:#c23b22}\
         text{font-family:sans-serif;font-size:13px}</style>\n",
    );

    for (i, s) in sets.iter().enumerate() {
        let class = if i == p.len() { "hub-set" } else { "set" };
        draw_set(&mut svg, &f, s, class, lo, hi);
    }

    let polygon: Vec<String> = u
        .chain_points
        .iter()
        .map(|a| format!("{:.3},{:.3}", f.x(a[0]), f.y(a[1])))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polygon class="chain" points="{}"/>"#,
        polygon.join(" ")
    );

    let x = &u.hub_point;
    for (a, &w) in u.chain_points.iter().zip(&p.weights().omega) {
        if w > 0.0 {
            let _ = writeln!(
                svg,
                r#"<line class="hub-ray" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                f.x(x[0]),
                f.y(x[1]),
                f.x(a[0]),
                f.y(a[1])
            );
        }
    }

    for (i, a) in u.chain_points.iter().enumerate() {
        point_with_label(&mut svg, &f, a, "point", &format!("a{}", i + 1));
    }
    point_with_label(&mut svg, &f, x, "hub", "x");
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn draw_set(svg: &mut String, f: &Frame, s: &ConvexSet, class: &str, lo: [f64; 2], hi: [f64; 2]) {
    match s {
        ConvexSet::Ball { center, radius } => {
            let _ = writeln!(
                svg,
                r#"<circle class="{class}" cx="{:.3}" cy="{:.3}" r="{:.3}"/>"#,
                f.x(center[0]),
                f.y(center[1]),
                f.len(*radius)
            );
        }
        ConvexSet::Box {
            center,
            half_widths,
        } => {
            let _ = writeln!(
                svg,
                r#"<rect class="{class}" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
                f.x(center[0] - half_widths[0]),
                f.y(center[1] + half_widths[1]),
                f.len(2.0 * half_widths[0]),
                f.len(2.0 * half_widths[1])
            );
        }
        ConvexSet::Singleton { point } => {
            let _ = writeln!(
                svg,
                r#"<circle class="{class}" cx="{:.3}" cy="{:.3}" r="4"/>"#,
                f.x(point[0]),
                f.y(point[1])
            );
        }
        ConvexSet::HalfSpace { normal, offset } => {
            // boundary line <n, y> = b, clipped to the drawing box
            let (n0, n1) = (normal[0], normal[1]);
            let mut ends = Vec::new();
            if n1.abs() > 1e-12 {
                for xv in [lo[0], hi[0]] {
                    let yv = (offset - n0 * xv) / n1;
                    if (lo[1]..=hi[1]).contains(&yv) {
                        ends.push([xv, yv]);
                    }
                }
            }
            if n0.abs() > 1e-12 {
                for yv in [lo[1], hi[1]] {
                    let xv = (offset - n1 * yv) / n0;
                    if (lo[0]..=hi[0]).contains(&xv) {
                        ends.push([xv, yv]);
                    }
                }
            }
            if ends.len() >= 2 {
                let (a, b) = (ends[0], ends[ends.len() - 1]);
                let _ = writeln!(
                    svg,
                    r#"<line class="{class} halfspace" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}"/>"#,
                    f.x(a[0]),
                    f.y(a[1]),
                    f.x(b[0]),
                    f.y(b[1])
                );
            }
        }
    }
}

fn point_with_label(svg: &mut String, f: &Frame, p: &Point, class: &str, label: &str) {
    let (cx, cy) = (f.x(p[0]), f.y(p[1]));
    let _ = writeln!(
        svg,
        r#"<circle class="{class}" cx="{cx:.3}" cy="{cy:.3}" r="3.5"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.3}" y="{:.3}">{label}</text>"#,
        cx + 6.0,
        cy - 6.0
    );
}

pub fn render_svg(p: &Problem, u: &Configuration, out: &Path) -> Result<()> {
    let svg = render_svg_string(p, u)?;
    write_atomic(out, &svg)
}

/// Point and edge listing used in place of a drawing outside the plane.
/// Rows are `kind,label,from,to,coordinates...`.
pub fn coordinate_table(p: &Problem, u: &Configuration) -> Result<String> {
    p.check_config(u)?;
    let m = p.len();
    let coord_header: Vec<String> = (1..=p.dim()).map(|d| format!("x{d}")).collect();
    let mut out = format!("kind,label,from,to,{}\n", coord_header.join(","));
    let coords = |q: &Point| {
        q.coords()
            .iter()
            .map(|c| format!("{c}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    let blank = vec![""; p.dim()].join(",");
    for (i, a) in u.chain_points.iter().enumerate() {
        let _ = writeln!(out, "point,a{},,,{}", i + 1, coords(a));
    }
    let _ = writeln!(out, "point,x,,,{}", coords(&u.hub_point));
    for i in 0..m {
        let _ = writeln!(
            out,
            "chain_edge,rho{},a{},a{},{blank}",
            i + 1,
            i + 1,
            (i + 1) % m + 1
        );
    }
    for (i, &w) in p.weights().omega.iter().enumerate() {
        if w > 0.0 {
            let _ = writeln!(out, "hub_edge,omega{},a{},x,{blank}", i + 1, i + 1);
        }
    }
    Ok(out)
}

/// Convergence plot of the objective and best objective against
/// `log10(k)`.
pub fn render_trace_svg(trace: &[TraceRecord]) -> Result<String> {
    if trace.is_empty() {
        return Err(GhwpError::invalid("cannot plot an empty trace"));
    }
    let xs: Vec<f64> = trace.iter().map(|r| (r.k as f64).log10()).collect();
    let lo_y = trace
        .iter()
        .map(|r| r.best_objective)
        .fold(f64::INFINITY, f64::min);
    let hi_y = trace
        .iter()
        .map(|r| r.objective)
        .fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1) = (xs[0], xs[xs.len() - 1].max(xs[0] + 1e-9));
    let span_y = (hi_y - lo_y).max(1e-12);
    let (w, h) = (CANVAS, CANVAS * 0.6);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (w - 2.0 * PAD);
    let py = |y: f64| h - PAD - (y - lo_y) / span_y * (h - 2.0 * PAD);
    let series = |pick: fn(&TraceRecord) -> f64| {
        trace
            .iter()
            .zip(&xs)
            .map(|(r, &x)| format!("{:.3},{:.3}", px(x), py(pick(r))))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(
        svg,
        r##"<polyline class="objective" fill="none" stroke="#9aa5b1" points="{}"/>"##,
        series(|r| r.objective)
    );
    let _ = writeln!(
        svg,
        r##"<polyline class="best-objective" fill="none" stroke="#c23b22" points="{}"/>"##,
        series(|r| r.best_objective)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{PAD}" y="20" font-family="sans-serif" font-size="13">best {lo_y} after {} steps</text>"#,
        trace[trace.len() - 1].k
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
