//! Log-scale convergence plots rendered as plain SVG.

use crate::error::{CliError, Result};
use std::fmt::Write as _;
use std::path::Path;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub title: Option<String>,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions { title: None, width: 720.0, height: 450.0 }
    }
}

/// Legend label for a trace file: its stem without a leading `NN_` run index.
pub fn label_for(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match stem.split_once('_') {
        Some((idx, rest)) if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) && !rest.is_empty() => rest.to_string(),
        _ => stem,
    }
}

/// Reads the `iter` column and `column` (or, when absent, `duality_gap` if the file has
/// one and `residual_l2` otherwise).
pub fn read_series(path: &Path, column: Option<&str>) -> Result<(Series, String)> {
    let bad = |reason: String| CliError::MalformedCsv { path: path.to_path_buf(), reason };
    let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rdr.headers().map_err(csv_err)?.clone();
    let find = |name: &str| header.iter().position(|h| h == name);
    let ix = find("iter").ok_or_else(|| bad("no iter column".into()))?;
    let name = match column {
        Some(c) => c.to_string(),
        None if find("duality_gap").is_some() => "duality_gap".to_string(),
        None => "residual_l2".to_string(),
    };
    let iy = find(&name).ok_or_else(|| bad(format!("no {name} column")))?;
    let mut s = Series { label: label_for(path), x: Vec::new(), y: Vec::new() };
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let parse = |i: usize| -> Result<f64> {
            let field = rec.get(i).ok_or_else(|| bad(format!("row {}: missing field", line + 2)))?;
            field.trim().parse::<f64>().map_err(|_| bad(format!("row {}: cannot parse '{field}'", line + 2)))
        };
        s.x.push(parse(ix)?);
        s.y.push(parse(iy)?);
    }
    if s.x.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok((s, name))
}

fn nice_step(range: f64, target: usize) -> f64 {
    let raw = range / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let frac = raw / mag;
    let nice = if frac <= 1.0 {
        1.0
    } else if frac <= 2.0 {
        2.0
    } else if frac <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the series against a log-scale y axis. Non-positive and non-finite values
/// break the curve. Output depends only on the inputs.
pub fn render_svg(series: &[Series], y_label: &str, opts: &PlotOptions) -> String {
    let (w, h) = (opts.width, opts.height);
    let (left, right, top, bottom) = (80.0, 170.0, 40.0, 55.0);
    let (pw, ph) = (w - left - right, h - top - bottom);

    let xs = series.iter().flat_map(|s| s.x.iter().copied()).filter(|v| v.is_finite());
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !x0.is_finite() {
        (x0, x1) = (0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let ys = series.iter().flat_map(|s| s.y.iter().copied()).filter(|v| v.is_finite() && *v > 0.0);
    let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut d0, mut d1) = if ymin.is_finite() { (ymin.log10().floor(), ymax.log10().ceil()) } else { (0.0, 1.0) };
    if d1 <= d0 {
        d1 = d0 + 1.0;
    }
    d0 = d0.max(-330.0);

    let px = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| top + (d1 - y.log10()) / (d1 - d0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if let Some(t) = &opts.title {
        let _ = writeln!(s, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#, left + pw / 2.0, escape(t));
    }

    let decades = (d1 - d0) as usize;
    let dstep = decades.div_ceil(8).max(1);
    let mut d = d0;
    while d <= d1 + 1e-9 {
        let y = top + (d1 - d) / (d1 - d0) * ph;
        let _ = writeln!(s, r##"<line x1="{left:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, left + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{}</text>"#, left - 6.0, y + 4.0, d as i64);
        d += dstep as f64;
    }
    let xstep = nice_step(x1 - x0, 6);
    let mut xt = (x0 / xstep).ceil() * xstep;
    while xt <= x1 + 1e-9 * xstep {
        let x = px(xt);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{top:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, top + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, top + ph + 18.0, fmt_tick(xt));
        xt += xstep;
    }
    let _ = writeln!(s, r#"<rect x="{left:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">iteration</text>"#, left + pw / 2.0, h - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );

    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (&x, &y) in ser.x.iter().zip(&ser.y) {
            if x.is_finite() && y.is_finite() && y > 0.0 {
                segments.last_mut().unwrap().push((px(x), py(y.max(10f64.powf(d0)))));
            } else if !segments.last().unwrap().is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|g| !g.is_empty()) {
            let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                pts.join(" ")
            );
        }
        let ly = top + 14.0 + 20.0 * k as f64;
        let lx = left + pw + 14.0;
        let _ = writeln!(s, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 24.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

/// Reads the trace files and writes one SVG with a curve per file.
pub fn plot_files(paths: &[impl AsRef<Path>], column: Option<&str>, out: &Path, opts: &PlotOptions) -> Result<()> {
    let mut series = Vec::new();
    let mut names = Vec::new();
    for p in paths {
        let (s, name) = read_series(p.as_ref(), column)?;
        series.push(s);
        names.push(name);
    }
    names.dedup();
    let svg = render_svg(&series, &names.join(" / "), opts);
    std::fs::write(out, svg).map_err(|e| CliError::io(out, e))
}
