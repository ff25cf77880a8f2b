//! Static SVG charts comparing labelled runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::RoundRecord;
use crate::export::ExportError;
use crate::metrics::{summarize, Summary};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

pub const ALIVE_PLOT: &str = "alive_nodes.svg";
pub const ENERGY_PLOT: &str = "residual_energy.svg";
pub const MESSAGES_PLOT: &str = "cumulative_messages.svg";
pub const DEATHS_PLOT: &str = "node_death_rounds.svg";

#[derive(Debug, Clone)]
pub struct LabeledRun {
    pub label: String,
    pub records: Vec<RoundRecord>,
    pub deployed: usize,
}

impl LabeledRun {
    pub fn new(label: impl Into<String>, records: Vec<RoundRecord>, deployed: usize) -> Self {
        Self {
            label: label.into(),
            records,
            deployed,
        }
    }

    /// Death-round summary used for the bar chart; a run without records
    /// yields all zeros.
    pub fn summary(&self) -> Summary {
        summarize(&self.records, self.deployed).unwrap_or_else(|_| Summary::without_rounds(true))
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick step of the form {1, 2, 5} x 10^k giving roughly `target` ticks.
fn tick_step(span: f64, target: f64) -> f64 {
    if span.is_nan() || span <= 0.0 {
        return 1.0;
    }
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1.0 || v == 0.0 {
        format!("{}", (v * 1000.0).round() / 1000.0)
    } else {
        format!("{v:.3}")
    }
}

fn decimate(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points;
    }
    let stride = points.len().div_ceil(MAX_POINTS);
    let last = *points.last().unwrap();
    let mut out: Vec<(f64, f64)> = points.into_iter().step_by(stride).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

fn frame(svg: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{y}" text-anchor="middle" transform="rotate(-90 20 {y})">{}</text>"#,
        escape(y_label),
        y = TOP + (HEIGHT - TOP - BOTTOM) / 2.0
    );
}

fn legend(svg: &mut String, labels: &[&str]) {
    let _ = writeln!(svg, r#"<g class="legend">"#);
    for (i, label) in labels.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{x}" y="{}" width="14" height="4" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            y - 2.0,
            PALETTE[i % PALETTE.len()],
            x + 20.0,
            y + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(svg, "</g>");
}

fn axes(svg: &mut String, x_max: f64, y_max: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let y_max = if y_max > 0.0 { y_max } else { 1.0 };
    let sx = move |x: f64| LEFT + x / x_max * plot_w;
    let sy = move |y: f64| TOP + plot_h - y / y_max * plot_h;

    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    let xs = tick_step(x_max, 8.0);
    let mut t = 0.0;
    while t <= x_max * (1.0 + 1e-9) {
        let _ = writeln!(
            svg,
            r#"<line x1="{x}" y1="{b}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 5.0,
            TOP + plot_h + 18.0,
            fmt_tick(t),
            x = sx(t),
            b = TOP + plot_h
        );
        t += xs;
    }
    let ys = tick_step(y_max, 6.0);
    let mut t = 0.0;
    while t <= y_max * (1.0 + 1e-9) {
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/><text x="{}" y="{}" text-anchor="end">{}</text>"##,
            LEFT,
            LEFT + plot_w,
            LEFT - 6.0,
            sy(t) + 4.0,
            fmt_tick(t),
            y = sy(t)
        );
        t += ys;
    }
    (sx, sy)
}

fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut svg = String::new();
    frame(&mut svg, title, x_label, y_label);
    let x_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold(0.0, f64::max);
    let y_max = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .fold(0.0, f64::max);
    let (sx, sy) = axes(&mut svg, x_max, y_max * 1.05);
    for (i, s) in series.iter().enumerate() {
        let mut d = String::new();
        for (j, &(x, y)) in s.points.iter().enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2} ",
                if j == 0 { "M" } else { "L" },
                sx(x),
                sy(y)
            );
        }
        let _ = writeln!(
            svg,
            r#"<path class="series" data-label="{}" d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
            escape(&s.label),
            d.trim_end(),
            PALETTE[i % PALETTE.len()]
        );
    }
    legend(
        &mut svg,
        &series.iter().map(|s| s.label.as_str()).collect::<Vec<_>>(),
    );
    svg.push_str("</svg>\n");
    svg
}

/// Grouped bars of first, half and last node death per run.
pub fn death_bar_chart(runs: &[LabeledRun]) -> String {
    let summaries: Vec<Summary> = runs.iter().map(LabeledRun::summary).collect();
    let mut svg = String::new();
    frame(
        &mut svg,
        "Rounds to first, half and last node death",
        "",
        "round",
    );
    let y_max = summaries
        .iter()
        .map(|s| s.lnd.max(s.hnd).max(s.fnd))
        .max()
        .unwrap_or(0) as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let y_top = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let sy = |y: f64| TOP + plot_h - y / y_top * plot_h;
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT},{TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w
    );
    let ys = tick_step(y_top, 6.0);
    let mut t = 0.0;
    while t <= y_top {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(t) + 4.0,
            fmt_tick(t)
        );
        t += ys;
    }

    let groups = ["FND", "HND", "LND"];
    let group_w = plot_w / groups.len() as f64;
    let bar_w = (group_w * 0.8) / runs.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let gx = LEFT + g as f64 * group_w + group_w * 0.1;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{name}</text>"#,
            gx + group_w * 0.4,
            TOP + plot_h + 18.0
        );
        for (i, (run, s)) in runs.iter().zip(&summaries).enumerate() {
            let v = [s.fnd, s.hnd, s.lnd][g];
            let y = sy(v as f64);
            let _ = writeln!(
                svg,
                r#"<rect class="bar" data-label="{}" data-metric="{name}" data-value="{v}" x="{:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                escape(&run.label),
                gx + i as f64 * bar_w,
                bar_w * 0.9,
                TOP + plot_h - y,
                PALETTE[i % PALETTE.len()]
            );
        }
    }
    legend(
        &mut svg,
        &runs.iter().map(|r| r.label.as_str()).collect::<Vec<_>>(),
    );
    svg.push_str("</svg>\n");
    svg
}

fn series_of(runs: &[LabeledRun], f: impl Fn(&RoundRecord) -> f64) -> Vec<Series> {
    runs.iter()
        .map(|run| Series {
            label: run.label.clone(),
            points: decimate(run.records.iter().map(|r| (r.round as f64, f(r))).collect()),
        })
        .collect()
}

pub fn alive_chart(runs: &[LabeledRun]) -> String {
    line_chart(
        "Alive nodes per round",
        "round",
        "alive nodes",
        &series_of(runs, |r| r.alive_total() as f64),
    )
}

pub fn energy_chart(runs: &[LabeledRun]) -> String {
    line_chart(
        "Total residual energy",
        "round",
        "energy (J)",
        &series_of(runs, |r| r.residual_total),
    )
}

pub fn messages_chart(runs: &[LabeledRun]) -> String {
    line_chart(
        "Cumulative packets delivered to the base station",
        "round",
        "packets",
        &series_of(runs, |r| r.msgs_to_bs as f64),
    )
}

/// Writes the four comparison charts into `dir` and returns their paths.
pub fn render_plots(
    runs: &[LabeledRun],
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, ExportError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let charts = [
        (ALIVE_PLOT, alive_chart(runs)),
        (ENERGY_PLOT, energy_chart(runs)),
        (MESSAGES_PLOT, messages_chart(runs)),
        (DEATHS_PLOT, death_bar_chart(runs)),
    ];
    let mut paths = Vec::with_capacity(charts.len());
    for (name, body) in charts {
        let path = dir.join(name);
        fs::write(&path, body)?;
        paths.push(path);
    }
    Ok(paths)
}
