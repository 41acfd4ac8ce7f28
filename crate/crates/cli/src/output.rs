use std::fmt::Write as _;
use std::io;
use std::path::Path;

use conegeo::geometry::Metric;
use conegeo::verify::GeodesicCertificate;
use serde::Serialize;

use crate::solve::{Prepared, Solution};
use crate::CliError;

/// Every float is written as `d.ddddddddddddddddde±x`: 17 significant
/// digits, enough to round-trip an `f64` and independent of the shortest
/// representation chosen by the serializer.
struct Fixed17;

impl serde_json::ser::Formatter for Fixed17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

#[derive(Serialize)]
struct Results<'a> {
    metric: String,
    #[serde(rename = "N")]
    n: usize,
    all_converged: bool,
    warnings: &'a [String],
    solutions: Vec<SolutionOut<'a>>,
}

#[derive(Serialize)]
struct SolutionOut<'a> {
    seed: i64,
    winding: Option<i64>,
    energy: f64,
    length: f64,
    transit_time: Option<f64>,
    converged: bool,
    accepted: usize,
    rejected: usize,
    vertex_slides: usize,
    certificate: &'a GeodesicCertificate<f64>,
    nodes: &'a [Vec<f64>],
}

pub fn results_json(prep: &Prepared, sols: &[Solution]) -> Result<Vec<u8>, CliError> {
    let results = Results {
        metric: prep.chart_metric.kind().to_string(),
        n: prep.n,
        all_converged: sols.iter().all(|s| s.converged),
        warnings: &prep.warnings,
        solutions: sols
            .iter()
            .map(|s| SolutionOut {
                seed: s.seed,
                winding: s.winding,
                energy: s.energy,
                length: s.length,
                transit_time: s.transit_time,
                converged: s.converged,
                accepted: s.report.accepted,
                rejected: s.report.rejected,
                vertex_slides: s.report.vertex_slides.len(),
                certificate: &s.certificate,
                nodes: &s.nodes,
            })
            .collect(),
    };
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    results.serialize(&mut ser).map_err(|e| CliError::Io(format!("results.json: {e}")))?;
    buf.push(b'\n');
    Ok(buf)
}

/// One row per flow iteration of every solution.
pub fn trace_csv(sols: &[Solution]) -> Result<Vec<u8>, CliError> {
    let err = |e: csv::Error| CliError::Io(format!("trace.csv: {e}"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "seed", "energy", "step", "event"]).map_err(err)?;
    for s in sols {
        for t in &s.report.trace {
            w.write_record([
                t.iteration.to_string(),
                s.seed.to_string(),
                format!("{:.16e}", t.energy),
                format!("{:.16e}", t.step),
                t.event.as_str().to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner().map_err(|e| CliError::Io(format!("trace.csv: {e}")))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];
const PANEL: f64 = 480.0;
const MARGIN: f64 = 24.0;

struct Panel {
    title: String,
    curves: Vec<(String, usize, Vec<[f64; 2]>)>,
    vertices: Vec<[f64; 2]>,
}

/// Chart-coordinate polylines, one colour per winding class, vertices as
/// crosses. Cone metrics get a second panel with the developed view, where
/// vertex-free geodesics are straight.
pub fn paths_svg(prep: &Prepared, sols: &[Solution]) -> String {
    let mut classes: Vec<Option<i64>> = sols.iter().map(|s| s.winding).collect();
    classes.sort();
    classes.dedup();
    let colour = |s: &Solution| classes.iter().position(|c| *c == s.winding).unwrap_or(0);
    let label = |s: &Solution| match s.winding {
        Some(k) => format!("seed {} (k = {k})", s.seed),
        None => format!("seed {}", s.seed),
    };
    let planar = |x: &Vec<f64>| [x[0], x.get(1).copied().unwrap_or(0.0)];

    let mut panels = vec![Panel {
        title: "chart".into(),
        curves: sols.iter().map(|s| (label(s), colour(s), s.nodes.iter().map(planar).collect())).collect(),
        vertices: prep.chart_metric.vertices().iter().map(planar).collect(),
    }];
    if let Metric::Cone { alpha } = prep.chart_metric {
        panels.push(Panel {
            title: format!("developed (alpha = {alpha})"),
            curves: sols.iter().map(|s| (label(s), colour(s), develop(alpha, &s.nodes))).collect(),
            vertices: vec![[0.0, 0.0]],
        });
    }

    let width = PANEL * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL}" viewBox="0 0 {width} {PANEL}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{PANEL}" fill="white"/>"#);
    for (i, panel) in panels.iter().enumerate() {
        draw_panel(&mut svg, panel, PANEL * i as f64);
    }
    svg.push_str("</svg>\n");
    svg
}

/// Unrolls cone nodes `(r, theta)` about the first node's angle.
fn develop(alpha: f64, nodes: &[Vec<f64>]) -> Vec<[f64; 2]> {
    let t0 = nodes.first().map_or(0.0, |x| x[1]);
    nodes
        .iter()
        .map(|x| {
            let phi = alpha * (x[1] - t0);
            [x[0] * phi.cos(), x[0] * phi.sin()]
        })
        .collect()
}

fn draw_panel(svg: &mut String, panel: &Panel, x_off: f64) {
    let pts = panel.curves.iter().flat_map(|c| c.2.iter()).chain(&panel.vertices);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts.filter(|p| p[0].is_finite() && p[1].is_finite()) {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    if !lo[0].is_finite() {
        (lo, hi) = ([-1.0, -1.0], [1.0, 1.0]);
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
    let scale = (PANEL - 2.0 * MARGIN) / span;
    let cx = (lo[0] + hi[0]) / 2.0;
    let cy = (lo[1] + hi[1]) / 2.0;
    let map = |p: &[f64; 2]| (x_off + PANEL / 2.0 + (p[0] - cx) * scale, PANEL / 2.0 - (p[1] - cy) * scale);

    let _ = writeln!(svg, r#"<text x="{:.1}" y="14">{}</text>"#, x_off + 6.0, panel.title);
    for (i, (label, c, curve)) in panel.curves.iter().enumerate() {
        let points: Vec<String> = curve
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let colour = PALETTE[c % PALETTE.len()];
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, points.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" fill="{colour}">{label}</text>"#,
            x_off + 6.0,
            PANEL - 8.0 - 13.0 * i as f64
        );
    }
    for v in &panel.vertices {
        let (x, y) = map(v);
        let _ = writeln!(
            svg,
            r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="black" stroke-width="1.5"/>"#,
            x - 4.0,
            y - 4.0,
            x + 4.0,
            y + 4.0,
            x - 4.0,
            y + 4.0,
            x + 4.0,
            y - 4.0
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
        vec![0.1f64, -2.0, 1e-300].serialize(&mut ser).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "[1.0000000000000001e-1,-2.0000000000000000e0,1.0000000000000000e-300]");
        let back: Vec<f64> = text.trim_matches(['[', ']']).split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(back, vec![0.1, -2.0, 1e-300]);
    }

    #[test]
    fn developed_cone_chord_is_straight() {
        // Antipodal unit-radius points on alpha = 0.5 develop to a right angle.
        let d = develop(0.5, &[vec![1.0, 0.0], vec![1.0, std::f64::consts::PI]]);
        assert!((d[1][0]).abs() < 1e-15 && (d[1][1] - 1.0).abs() < 1e-15);
    }
}
