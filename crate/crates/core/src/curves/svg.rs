use std::fmt::Write as _;

use super::violin::ViolinSummary;

const SLOT: f64 = 150.0;
const HALF_WIDTH: f64 = 60.0;
const TOP: f64 = 30.0;
const PLOT_HEIGHT: f64 = 360.0;
const LEFT: f64 = 70.0;

fn y_of(p: f64) -> f64 {
    TOP + (1.0 - p) * PLOT_HEIGHT
}

/// Static SVG with one mirrored-density violin per group on a shared
/// `[0, 1]` axis. Medians are solid lines, quartiles dashed.
pub fn render_violin_svg(summaries: &[ViolinSummary]) -> String {
    let width = LEFT + SLOT * summaries.len().max(1) as f64 + 20.0;
    let height = TOP + PLOT_HEIGHT + 60.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"  <rect x="0" y="0" width="{width:.0}" height="{height:.0}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"  <line class="axis" x1="{LEFT:.1}" y1="{:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="black"/>"#,
        y_of(1.0),
        y_of(0.0)
    );
    for k in 0..=4 {
        let p = k as f64 / 4.0;
        let y = y_of(p);
        let _ = writeln!(
            s,
            r#"  <line x1="{:.1}" y1="{y:.1}" x2="{LEFT:.1}" y2="{y:.1}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"  <text class="tick" x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            ["0", "0.25", "0.5", "0.75", "1"][k]
        );
    }
    let _ = writeln!(
        s,
        r#"  <text x="16" y="{:.1}" transform="rotate(-90 16 {:.1})" text-anchor="middle">Predicted survival probability</text>"#,
        y_of(0.5),
        y_of(0.5)
    );
    for (i, v) in summaries.iter().enumerate() {
        let cx = LEFT + SLOT * (i as f64 + 0.5);
        let peak = v.density.iter().cloned().fold(0.0, f64::max);
        let scale = if peak > 0.0 { HALF_WIDTH / peak } else { 0.0 };
        let mut path = String::new();
        for (k, (g, d)) in v.grid.iter().zip(&v.density).enumerate() {
            let _ = write!(path, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, cx + d * scale, y_of(*g));
        }
        for (g, d) in v.grid.iter().zip(&v.density).rev() {
            let _ = write!(path, "L{:.2},{:.2} ", cx - d * scale, y_of(*g));
        }
        path.push('Z');
        let _ = writeln!(s, r#"  <g class="violin" data-group="{}">"#, v.group);
        let _ = writeln!(s, r##"    <path d="{path}" fill="#9ecae1" stroke="#3182bd"/>"##);
        for (q, dash) in [(v.q1, true), (v.median, false), (v.q3, true)] {
            let y = y_of(q);
            let _ = writeln!(
                s,
                r#"    <line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"{}/>"#,
                cx - HALF_WIDTH * 0.5,
                cx + HALF_WIDTH * 0.5,
                if dash { r#" stroke-dasharray="4 3""# } else { r#" stroke-width="2""# }
            );
        }
        let _ = writeln!(
            s,
            r#"    <text x="{cx:.1}" y="{:.1}" text-anchor="middle">{} (n={})</text>"#,
            y_of(0.0) + 24.0,
            v.group,
            v.raw.len()
        );
        let _ = writeln!(s, "  </g>");
    }
    s.push_str("</svg>\n");
    s
}
