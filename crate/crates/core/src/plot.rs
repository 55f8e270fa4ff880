//! SVG learning curves: mean success per strategy with a min-max band.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::report::{self, Envelope, ReportError, RunRow};

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Error)]
pub enum PlotError {
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("invalid glob pattern: {0}")]
    Pattern(#[from] glob::PatternError),
    #[error("no CSV files match {0}")]
    NoInput(String),
    #[error("input CSVs contain no rows")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Renders the curves of all rows into an SVG document.
pub fn render_svg(rows: &[RunRow]) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let curves = report::envelopes(rows);
    let t_max = rows.iter().map(|r| r.timestep).max().unwrap_or(0).max(1) as f64;
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let x = |t: u64| LEFT + pw * t as f64 / t_max;
    let y = |s: f64| TOP + ph * (1.0 - s);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    for i in 0..=5 {
        let s = i as f64 / 5.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{yy:.2}" x2="{x2:.2}" y2="{yy:.2}" stroke="#ddd"/><text x="{tx:.2}" y="{ty:.2}" text-anchor="end">{s:.1}</text>"##,
            yy = y(s),
            x2 = LEFT + pw,
            tx = LEFT - 6.0,
            ty = y(s) + 4.0,
        );
    }
    for i in 0..=5 {
        let t = (t_max * i as f64 / 5.0).round() as u64;
        let _ = writeln!(
            svg,
            r#"<text x="{tx:.2}" y="{ty:.2}" text-anchor="middle">{t}</text>"#,
            tx = x(t),
            ty = TOP + ph + 18.0,
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{cx:.2}" y="{by:.2}" text-anchor="middle">timesteps</text>"#,
        cx = LEFT + pw / 2.0,
        by = HEIGHT - 15.0,
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 18 {cy:.2})">success rate</text>"#,
        cy = TOP + ph / 2.0,
    );

    // BTreeMap order makes colors a function of the sorted strategy names.
    for (i, (strategy, env)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if env.iter().any(|e| e.min != e.max) {
            let _ = writeln!(svg, r#"<path d="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band_path(env, &x, &y));
        }
        let line: Vec<String> = env.iter().map(|e| format!("{:.2},{:.2}", x(e.timestep), y(e.mean))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{lx2:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="3"/><text x="{tx:.2}" y="{ty:.2}">{}</text>"#,
            escape(strategy),
            lx2 = lx + 20.0,
            tx = lx + 26.0,
            ty = ly + 4.0,
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn band_path(env: &[Envelope], x: &impl Fn(u64) -> f64, y: &impl Fn(f64) -> f64) -> String {
    let mut d = String::new();
    for (i, e) in env.iter().enumerate() {
        let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { 'M' } else { 'L' }, x(e.timestep), y(e.max));
    }
    for e in env.iter().rev() {
        let _ = write!(d, "L{:.2},{:.2} ", x(e.timestep), y(e.min));
    }
    d.push('Z');
    d
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Reads every CSV matching `pattern` and writes one SVG to `out`. Nothing is
/// written when any input is unreadable or lacks a required column.
pub fn plot_glob(pattern: &str, out: &Path) -> Result<usize, PlotError> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern)?.filter_map(Result::ok).collect();
    paths.sort();
    if paths.is_empty() {
        return Err(PlotError::NoInput(pattern.to_string()));
    }
    let mut rows = Vec::new();
    for p in &paths {
        rows.extend(report::read_run_rows(p)?);
    }
    let svg = render_svg(&rows)?;
    fs::write(out, svg).map_err(|source| PlotError::Io { path: out.to_path_buf(), source })?;
    Ok(paths.len())
}
