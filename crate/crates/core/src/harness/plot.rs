//! Success-rate curves as plain SVG polylines.

use std::fmt::Write as _;

use super::metrics::{AggregateRow, MetricsRow};

pub const PLOT_HEADER: &str = "<!-- multigoal-plot v1 -->";

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const SEED_COLORS: [&str; 6] = [
    "#9ecae1", "#fdae6b", "#a1d99b", "#bcbddc", "#fc9272", "#d9d9d9",
];

fn points(xy: impl Iterator<Item = (f64, f64)>, x_max: f64) -> String {
    let (w, h) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let mut s = String::new();
    for (x, y) in xy {
        let px = MARGIN + w * x / x_max;
        let py = MARGIN + h * (1.0 - y.clamp(0.0, 1.0));
        write!(s, "{px:.2},{py:.2} ").expect("writing to a String");
    }
    s.trim_end().to_string()
}

/// Test success rate against episodes seen: one thin line per seed and a
/// thick line for the mean.
pub fn success_svg(title: &str, runs: &[Vec<MetricsRow>], agg: &[AggregateRow]) -> String {
    let x_max = runs
        .iter()
        .flatten()
        .map(|r| r.episodes_seen)
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let mut s = String::new();
    let mut line = |l: String| {
        s.push_str(&l);
        s.push('\n');
    };
    line(PLOT_HEADER.into());
    line(format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    ));
    line(format!(
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    ));
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    line(format!(
        r#"<polyline points="{x0},{y0} {x0},{y1} {x1},{y1}" fill="none" stroke="black"/>"#
    ));
    for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let y = y1 - (y1 - y0) * v;
        line(format!(
            r#"<text x="{}" y="{}" font-size="12" text-anchor="end">{label}</text>"#,
            x0 - 6.0,
            y + 4.0
        ));
    }
    line(format!(
        r#"<text x="{x1}" y="{}" font-size="12" text-anchor="end">{x_max} episodes</text>"#,
        y1 + 20.0
    ));
    line(format!(
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{title}: test success rate</text>"#,
        WIDTH / 2.0,
        y0 - 15.0
    ));
    for (i, run) in runs.iter().enumerate() {
        let pts = points(
            run.iter()
                .map(|r| (r.episodes_seen as f64, r.test_success_rate)),
            x_max,
        );
        line(format!(
            r#"<polyline points="{pts}" fill="none" stroke="{}" stroke-width="1"/>"#,
            SEED_COLORS[i % SEED_COLORS.len()]
        ));
    }
    let pts = points(
        agg.iter().map(|r| (r.episodes_seen as f64, r.success_mean)),
        x_max,
    );
    line(format!(
        r##"<polyline points="{pts}" fill="none" stroke="#08519c" stroke-width="2.5"/>"##
    ));
    line("</svg>".into());
    s
}
