//! SVG figures: the boundary, the grasped arcs of a force profile and a
//! normalized quality colormap over grasp starts.

use std::fmt::Write as _;

use crate::geometry::{BoundaryCurve, CurveSegment};

const CANVAS: f64 = 480.0;
const MARGIN: f64 = 40.0;
const BAR_WIDTH: f64 = 90.0;
const OBJECT_COLOR: &str = "#f28e2b";
const GRASP_COLOR: &str = "#000000";
const QUALITY_LOW: [u8; 3] = [247, 247, 247];
const QUALITY_HIGH: [u8; 3] = [231, 41, 138];

/// Normal force along a grasp segment.
#[derive(Debug, Clone, Copy)]
pub struct ForceOverlay<'a> {
    pub segment: &'a CurveSegment,
    pub normal_forces: &'a [f64],
}

/// Quality values at grasp starts `s0_i` (boundary arclength).
#[derive(Debug, Clone, Copy)]
pub struct QualityMap<'a> {
    pub starts: &'a [f64],
    pub values: &'a [f64],
}

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
}

impl Frame {
    fn new(curve: &BoundaryCurve) -> Self {
        let (mut min_x, mut max_x, mut min_y, mut max_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in curve.samples() {
            min_x = min_x.min(p.position.x);
            max_x = max_x.max(p.position.x);
            min_y = min_y.min(p.position.y);
            max_y = max_y.max(p.position.y);
        }
        let span = (max_x - min_x).max(max_y - min_y).max(1e-12);
        Frame {
            min_x,
            max_y,
            scale: (CANVAS - 2.0 * MARGIN) / span,
        }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            MARGIN + (x - self.min_x) * self.scale,
            MARGIN + (self.max_y - y) * self.scale,
        )
    }
}

fn polyline<'a>(frame: &Frame, pts: impl Iterator<Item = &'a nalgebra::Vector2<f64>>) -> String {
    let mut s = String::new();
    for (i, p) in pts.enumerate() {
        let (x, y) = frame.map(p.x, p.y);
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.3},{y:.3}");
    }
    s
}

fn mix(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let c: Vec<u8> = QUALITY_LOW
        .iter()
        .zip(QUALITY_HIGH)
        .map(|(&a, b)| (a as f64 + t * (b as f64 - a as f64)).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Index ranges of consecutive samples with `f_n > 1e-3 max f_n`.
pub fn grasped_runs(normal_forces: &[f64]) -> Vec<(usize, usize)> {
    let fmax = normal_forces.iter().cloned().fold(0.0, f64::max);
    if fmax <= 0.0 {
        return Vec::new();
    }
    let thresh = 1e-3 * fmax;
    let mut runs = Vec::new();
    let mut open: Option<usize> = None;
    for (j, &f) in normal_forces.iter().enumerate() {
        match (f > thresh, open) {
            (true, None) => open = Some(j),
            (false, Some(a)) => {
                runs.push((a, j - 1));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(a) = open {
        runs.push((a, normal_forces.len() - 1));
    }
    runs
}

/// Render the boundary with optional overlays. Output depends only on the
/// inputs.
pub fn render_svg(
    curve: &BoundaryCurve,
    force: Option<ForceOverlay<'_>>,
    quality: Option<QualityMap<'_>>,
) -> String {
    let frame = Frame::new(curve);
    let width = CANVAS + if quality.is_some() { BAR_WIDTH } else { 0.0 };
    let height = CANVAS + 50.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">
<rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#
    );

    let samples = curve.samples();
    match quality {
        Some(q) if !q.values.is_empty() => {
            let qmax = q.values.iter().cloned().fold(f64::MIN, f64::max);
            let l0 = curve.total_length();
            for w in samples.windows(2) {
                let mid = 0.5 * (w[0].s + w[1].s);
                let i = nearest_start(q.starts, mid, l0);
                let t = if qmax > 0.0 { q.values[i] / qmax } else { 0.0 };
                let _ = writeln!(
                    svg,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="9" stroke-linecap="butt"/>"#,
                    polyline(&frame, [w[0].position, w[1].position].iter()),
                    mix(t)
                );
            }
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="none" stroke="{OBJECT_COLOR}" stroke-width="1.5"/>"#,
                polyline(&frame, samples.iter().map(|p| &p.position))
            );
            colorbar(&mut svg);
        }
        _ => {
            let _ = writeln!(
                svg,
                r#"<polygon points="{}" fill="{OBJECT_COLOR}" fill-opacity="0.35" stroke="{OBJECT_COLOR}" stroke-width="2"/>"#,
                polyline(&frame, samples.iter().map(|p| &p.position))
            );
        }
    }

    if let Some(f) = force {
        let seg = f.segment.samples();
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#777777" stroke-width="1.5" stroke-dasharray="6,4"/>"##,
            polyline(&frame, seg.iter().map(|p| &p.position))
        );
        for (a, b) in grasped_runs(f.normal_forces) {
            let pts = if a == b { &seg[a..=a] } else { &seg[a..=b] };
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{GRASP_COLOR}" stroke-width="6" stroke-linecap="round"/>"#,
                polyline(&frame, pts.iter().map(|p| &p.position))
            );
        }
    }

    legend(&mut svg, force.is_some(), quality.is_some());
    svg.push_str("</svg>\n");
    svg
}

fn nearest_start(starts: &[f64], s: f64, l0: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::MAX;
    for (i, &s0) in starts.iter().enumerate() {
        let d = (s - s0).rem_euclid(l0);
        let d = d.min(l0 - d);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn colorbar(svg: &mut String) {
    let x = CANVAS + 20.0;
    let (top, h) = (MARGIN, CANVAS - 2.0 * MARGIN);
    let _ = writeln!(
        svg,
        r#"<defs><linearGradient id="qbar" x1="0" y1="1" x2="0" y2="0"><stop offset="0" stop-color="{}"/><stop offset="1" stop-color="{}"/></linearGradient></defs>
<rect x="{x:.1}" y="{top:.1}" width="18" height="{h:.1}" fill="url(#qbar)" stroke="black" stroke-width="0.5"/>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">1.0</text>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11">0.0</text>
<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11">Q / max Q</text>"#,
        mix(0.0),
        mix(1.0),
        x + 22.0,
        top + 8.0,
        x + 22.0,
        top + h,
        top - 10.0
    );
}

fn legend(svg: &mut String, force: bool, quality: bool) {
    let y = CANVAS + 15.0;
    let mut x = MARGIN;
    let mut item = |svg: &mut String, stroke: &str, width: f64, dash: &str, label: &str| {
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{stroke}" stroke-width="{width}"{dash}/>
<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">{label}</text>"#,
            x + 24.0,
            x + 30.0,
            y + 4.0
        );
        x += 150.0;
    };
    item(svg, OBJECT_COLOR, 3.0, "", "object boundary");
    if force {
        item(
            svg,
            "#777777",
            1.5,
            r#" stroke-dasharray="6,4""#,
            "grasp interval",
        );
        item(svg, GRASP_COLOR, 6.0, "", "grasped (f_n > 0)");
    }
    if quality {
        item(svg, &mix(1.0), 9.0, "", "quality of start");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_only_is_a_closed_path() {
        let c = BoundaryCurve::circle(1.0, 32).unwrap();
        let svg = render_svg(&c, None, None);
        assert!(svg.starts_with("<?xml"));
        assert_eq!(svg.matches("<polygon").count(), 1);
        assert!(!svg.contains(GRASP_COLOR));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn runs_split_on_the_threshold() {
        let f = [5.0, 4.0, 0.0, 0.0, 0.0, 3.0, 6.0];
        assert_eq!(grasped_runs(&f), vec![(0, 1), (5, 6)]);
        assert!(grasped_runs(&[0.0, 0.0]).is_empty());
        assert_eq!(grasped_runs(&[1.0, 1.0, 1.0]), vec![(0, 2)]);
    }

    #[test]
    fn constant_quality_is_uniformly_colored() {
        let c = BoundaryCurve::circle(1.0, 40).unwrap();
        let starts: Vec<f64> = (0..10)
            .map(|i| i as f64 * c.total_length() / 10.0)
            .collect();
        let values = vec![0.07; 10];
        let svg = render_svg(
            &c,
            None,
            Some(QualityMap {
                starts: &starts,
                values: &values,
            }),
        );
        let high = mix(1.0);
        let stroked = svg
            .matches(&format!(r#"stroke="{high}" stroke-width="9""#))
            .count();
        assert_eq!(stroked, 40 + 1);
        assert!(svg.contains("qbar"));
    }

    #[test]
    fn nearest_start_wraps() {
        let starts = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(nearest_start(&starts, 3.9, 4.0), 0);
        assert_eq!(nearest_start(&starts, 1.2, 4.0), 1);
    }
}
