//! Plain SVG snapshots of planar frameworks.

use std::fmt::Write;

use nalgebra::DVector;
use periflex::analysis::DeformationPath;
use periflex::{realize, PeriodicGraph, PlacementParams};

use crate::CliError;

const PANEL: f64 = 320.0;
const MARGIN: f64 = 16.0;

/// Segments and joints of one fundamental domain plus one ring of translates.
struct Scene {
    bars: Vec<(DVector<f64>, DVector<f64>, bool)>,
    joints: Vec<(DVector<f64>, bool)>,
    cell: [DVector<f64>; 4],
}

fn scene(g: &PeriodicGraph, p: &PlacementParams, pd_tol: f64) -> Result<Scene, CliError> {
    let raw = realize(p, pd_tol)?;
    let mut bars = Vec::new();
    let mut joints = Vec::new();
    for a in -1i64..=1 {
        for b in -1i64..=1 {
            let home = a == 0 && b == 0;
            for v in 0..g.vertex_count() {
                joints.push((raw.position(v, &[a, b]), home));
            }
            for e in g.edges() {
                let from = raw.position(e.tail, &[a, b]);
                let to = raw.position(e.head, &[a + e.label[0], b + e.label[1]]);
                bars.push((from, to, home));
            }
        }
    }
    let cell = [
        raw.position(0, &[0, 0]),
        raw.position(0, &[1, 0]),
        raw.position(0, &[1, 1]),
        raw.position(0, &[0, 1]),
    ];
    Ok(Scene { bars, joints, cell })
}

/// Side-by-side panels at the first, start and last samples of `path`
/// (just the start point when the path is empty).
pub fn render(g: &PeriodicGraph, path: &DeformationPath, pd_tol: f64) -> Result<String, CliError> {
    let mut picks = vec![0, path.start_index, path.samples.len().saturating_sub(1)];
    picks.dedup();
    let samples: Vec<&PlacementParams> = picks.iter().filter_map(|&k| path.samples.get(k)).collect();
    if samples.is_empty() {
        return Err(CliError::Usage("nothing to draw: the path is empty".into()));
    }
    let scenes: Vec<Scene> = samples.iter().map(|p| scene(g, p, pd_tol)).collect::<Result<_, _>>()?;

    // one common scale keeps the panels comparable
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut extent = 0.0f64;
    for s in &scenes {
        let xs = s.joints.iter().map(|(p, _)| p[0]);
        let ys = s.joints.iter().map(|(p, _)| p[1]);
        let (x0, x1) = xs.fold((lo, hi), |(a, b), v| (a.min(v), b.max(v)));
        let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        extent = extent.max(x1 - x0).max(y1 - y0);
        lo = lo.min(x0.min(y0));
        hi = hi.max(x1.max(y1));
    }
    let scale = (PANEL - 2.0 * MARGIN) / extent.max(1e-9);

    let width = PANEL * scenes.len() as f64;
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL}" viewBox="0 0 {width} {PANEL}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (k, s) in scenes.iter().enumerate() {
        let cx = s.joints.iter().map(|(p, _)| p[0]).sum::<f64>() / s.joints.len() as f64;
        let cy = s.joints.iter().map(|(p, _)| p[1]).sum::<f64>() / s.joints.len() as f64;
        let ox = PANEL * k as f64 + PANEL / 2.0;
        let map = |p: &DVector<f64>| (ox + (p[0] - cx) * scale, PANEL / 2.0 - (p[1] - cy) * scale);
        writeln!(out, r#"<g id="sample-{}">"#, picks[k]).unwrap();
        let cell: Vec<String> = s.cell.iter().map(|p| {
            let (x, y) = map(p);
            format!("{x:.2},{y:.2}")
        }).collect();
        writeln!(
            out,
            r##"<polygon points="{}" fill="#eef3fb" stroke="#6b8cc7" stroke-dasharray="4 3"/>"##,
            cell.join(" ")
        )
        .unwrap();
        for (a, b, home) in &s.bars {
            let ((x1, y1), (x2, y2)) = (map(a), map(b));
            let (color, w) = if *home { ("#202020", 2.0) } else { ("#a0a0a0", 1.0) };
            writeln!(
                out,
                r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{color}" stroke-width="{w}"/>"#
            )
            .unwrap();
        }
        for (p, home) in &s.joints {
            let (x, y) = map(p);
            let (fill, r) = if *home { ("#c0392b", 4.0) } else { ("#7f8c8d", 2.5) };
            writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{fill}"/>"#).unwrap();
        }
        writeln!(out, "</g>").unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}
