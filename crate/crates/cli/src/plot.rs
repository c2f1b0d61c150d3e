//! Self-contained SVG line plots with a logarithmic vertical axis.

use std::fmt::Write as _;

/// Values below this are drawn at the floor.
pub const LOG_FLOOR: f64 = 1e-12;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 460.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the series; non-finite points are skipped and `y` is clamped to
/// [`LOG_FLOOR`].
pub fn log_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let finite = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite();
    let pts = || series.iter().flat_map(|s| s.points.iter().filter(|p| finite(p)));
    let x_max = pts().map(|p| p.0).fold(0.0f64, f64::max).max(1.0);
    let x_min = pts().map(|p| p.0).fold(f64::INFINITY, f64::min).min(x_max).min(0.0);
    let ly = |y: f64| y.max(LOG_FLOOR).log10();
    let mut y_lo = pts().map(|p| ly(p.1)).fold(f64::INFINITY, f64::min).floor();
    let mut y_hi = pts().map(|p| ly(p.1)).fold(f64::NEG_INFINITY, f64::max).ceil();
    if !y_lo.is_finite() || !y_hi.is_finite() {
        (y_lo, y_hi) = (LOG_FLOOR.log10(), 0.0);
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| TOP + (y_hi - ly(y)) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );
    // Decade grid lines; thin out labels on tall ranges.
    let decades = (y_hi - y_lo) as i64;
    let label_every = (decades / 12 + 1).max(1);
    for d in 0..=decades {
        let e = y_lo as i64 + d;
        let y = TOP + (y_hi - e as f64) / (y_hi - y_lo) * plot_h;
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##,
            LEFT + plot_w
        );
        if d % label_every == 0 {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
                LEFT - 6.0,
                y + 4.0
            );
        }
    }
    for i in 0..=5 {
        let x = x_min + (x_max - x_min) * i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(x),
            TOP + plot_h + 18.0,
            tick(x)
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = s
            .points
            .iter()
            .filter(|p| finite(p))
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if !coords.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(x: f64) -> String {
    if x == x.round() && x.abs() < 1e9 {
        format!("{}", x as i64)
    } else {
        format!("{x:.3}")
    }
}
