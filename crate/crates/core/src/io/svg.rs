use std::fmt::Write;

use crate::pose::{KeypointSet, Topology, NUM_JOINTS};

/// Default stroke colors, cycled per pose.
pub const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub stroke_color: String,
    pub joint_radius: f64,
    opacity: f64,
}

impl SvgStyle {
    /// Opacity is clamped into `[0, 1]`.
    pub fn new(stroke_color: impl Into<String>, joint_radius: f64, opacity: f64) -> Self {
        let opacity = if opacity.is_nan() { 1.0 } else { opacity.clamp(0.0, 1.0) };
        Self { stroke_color: stroke_color.into(), joint_radius, opacity }
    }

    pub fn opacity(&self) -> f64 {
        self.opacity
    }

    pub fn palette(i: usize) -> Self {
        Self::new(PALETTE[i % PALETTE.len()], 4.0, 1.0)
    }
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Draws each pose as parent-edge lines between visible joints and circles on
/// visible joints. Output is a deterministic SVG 1.1 document.
pub fn render_svg(poses: &[(KeypointSet, SvgStyle)], canvas: (f64, f64), topo: &Topology) -> String {
    let (w, h) = canvas;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.2}" height="{h:.2}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    for (i, (pose, style)) in poses.iter().enumerate() {
        let color = escape_attr(&style.stroke_color);
        let _ = writeln!(
            s,
            r#"<g id="pose-{i}" stroke="{color}" fill="{color}" opacity="{:.3}" stroke-width="2" stroke-linecap="round">"#,
            style.opacity
        );
        for (p, j) in topo.segments() {
            if let (Some(a), Some(b)) = (pose.get(p), pose.get(j)) {
                let _ = writeln!(s, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/>"#, a.x, a.y, b.x, b.y);
            }
        }
        for j in 0..NUM_JOINTS {
            if let Some(p) = pose.get(j) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="{:.2}"/>"#, p.x, p.y, style.joint_radius);
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
