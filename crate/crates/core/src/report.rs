//! CSV traces, summary text and SVG line charts.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scenarios::{Column, RunOutput, RunSummary, ScenarioConfig};

/// Significant digits kept in every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 12;

pub const SVG_WIDTH: f64 = 800.0;
pub const SVG_HEIGHT: f64 = 500.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_Y: f64 = 40.0;
const MAX_POINTS: usize = 1000;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Shortest round-trip text of `v` after rounding to 12 significant digits.
/// Non-finite values print as `nan`, `inf` or `-inf`.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let rounded: f64 = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("formatted float parses");
    let s = format!("{rounded:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

fn cell(v: Option<f64>) -> String {
    match v {
        Some(x) if !x.is_nan() => format_number(x),
        _ => String::new(),
    }
}

/// Trace CSV with the columns requested by the scenario, one row per extraction point.
pub fn trace_csv(config: &ScenarioConfig, run: &RunOutput) -> String {
    let mut out = String::new();
    let header: Vec<&str> = config.outputs.iter().map(|c| c.name()).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let s = &run.series;
    for i in 0..s.len() {
        let row: Vec<String> = config
            .outputs
            .iter()
            .map(|c| match c {
                Column::T => cell(Some(s.t_grid[i])),
                Column::XClassical => cell(Some(run.trajectory.values[i])),
                Column::G => cell(s.g_values[i]),
                Column::ThetaHat => cell(s.theta_hat[i]),
                Column::LHat => cell(s.l_hat[i]),
                Column::Valid => if s.l_hat[i].is_some() { "1" } else { "0" }.to_string(),
            })
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_else(|| "none".to_string())
}

/// `key = value` rendering of a summary.
pub fn summary_text(name: &str, summary: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario = {name}");
    let _ = writeln!(out, "theta_exact = {}", opt(summary.theta_exact));
    let _ = writeln!(
        out,
        "theta_extracted_final = {}",
        opt(summary.theta_extracted_final)
    );
    let _ = writeln!(
        out,
        "l_residual_max_tail = {}",
        format_number(summary.l_residual_max_tail)
    );
    let _ = writeln!(
        out,
        "classical_residual_max_tail = {}",
        format_number(summary.classical_residual_max_tail)
    );
    let _ = writeln!(
        out,
        "residual_ratio = {}",
        format_number(summary.residual_ratio())
    );
    let _ = writeln!(out, "gamma = {}", opt(summary.gamma));
    let _ = writeln!(
        out,
        "clamp_fraction = {}",
        format_number(summary.clamp_fraction)
    );
    let _ = writeln!(out, "verdict = {}", summary.verdict());
    out
}

/// Header of [`summary_row`].
pub const SUMMARY_HEADER: &str = "variant,axis,value,status,theta_exact,theta_extracted_final,l_residual_max_tail,classical_residual_max_tail,gamma,clamp_fraction,verdict";

/// One row of a sweep summary table; failed variants keep their error text.
pub fn summary_row(variant: &str, axis: &str, value: f64, result: &Result<RunSummary>) -> String {
    let quoted = |s: &str| format!("\"{}\"", s.replace('"', "\"\""));
    let head = format!(
        "{},{},{}",
        quoted(variant),
        quoted(axis),
        format_number(value)
    );
    match result {
        Ok(s) => format!(
            "{head},ok,{},{},{},{},{},{},{}",
            cell(s.theta_exact),
            cell(s.theta_extracted_final),
            format_number(s.l_residual_max_tail),
            format_number(s.classical_residual_max_tail),
            cell(s.gamma),
            format_number(s.clamp_fraction),
            s.verdict()
        ),
        Err(e) => format!("{head},{},,,,,,,", quoted(&format!("error: {e}"))),
    }
}

fn round_sig(v: f64, up: bool) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = 10f64.powf(v.abs().log10().floor());
    let m = v / mag;
    let m = if up { m.ceil() } else { m.floor() };
    // Re-read through the number formatter to drop representation noise.
    format_number(m * mag).parse().unwrap_or(m * mag)
}

/// Axis range covering `[lo, hi]` with both ends rounded outwards to one
/// significant digit.
pub fn axis_range(lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (round_sig(lo, false), round_sig(hi, true));
    if a == b {
        let pad = if a == 0.0 { 1.0 } else { a.abs() * 0.1 };
        a -= pad;
        b += pad;
    }
    (a, b)
}

/// Renders a CSV (first column on the x axis) as an 800×500 SVG line chart.
///
/// Every column except the first and `valid` becomes a polyline; empty cells
/// break the line. Output depends on the CSV text alone.
pub fn svg_from_csv(csv: &str) -> Result<String> {
    let bad = |m: &str| Error::InvalidParams(format!("chart input: {m}"));
    let mut lines = csv.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty csv"))?
        .split(',')
        .collect();
    if header.len() < 2 {
        return Err(bad("need at least two columns"));
    }
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(bad(&format!("row {} has {} cells", n + 2, cells.len())));
        }
        let parsed = cells
            .iter()
            .map(|c| {
                if c.is_empty() {
                    Ok(None)
                } else {
                    c.parse::<f64>()
                        .map(|v| v.is_finite().then_some(v))
                        .map_err(|_| bad(&format!("row {}: `{c}` is not a number", n + 2)))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        if parsed[0].is_none() {
            return Err(bad(&format!("row {} has no x value", n + 2)));
        }
        rows.push(parsed);
    }
    if rows.is_empty() {
        return Err(bad("no data rows"));
    }

    let series: Vec<usize> = (1..header.len())
        .filter(|&j| header[j] != "valid")
        .collect();
    let stride = rows.len().div_ceil(MAX_POINTS);
    let picked: Vec<&Vec<Option<f64>>> = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| i % stride == 0 || *i == rows.len() - 1)
        .map(|(_, r)| r)
        .collect();

    let xs = picked.iter().filter_map(|r| r[0]);
    let (xmin, xmax) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let ys = picked
        .iter()
        .flat_map(|r| series.iter().filter_map(move |&j| r[j]));
    let (ymin, ymax) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    let (ymin, ymax) = if ymin.is_finite() {
        (ymin, ymax)
    } else {
        (0.0, 1.0)
    };
    let (x0, x1) = axis_range(xmin, xmax);
    let (y0, y1) = axis_range(ymin, ymax);

    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - 2.0 * MARGIN_Y;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_Y + (y1 - y) / (y1 - y0) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = SVG_WIDTH,
        h = SVG_HEIGHT
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_Y}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#bbbbbb" stroke-dasharray="4 4"/>"##,
            px(x0),
            py(0.0),
            px(x1),
            py(0.0)
        );
    }
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: &str| {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="12" text-anchor="{anchor}">{text}</text>"#
        );
    };
    label(
        &mut svg,
        px(x0),
        SVG_HEIGHT - MARGIN_Y + 18.0,
        "middle",
        &format_number(x0),
    );
    label(
        &mut svg,
        px(x1),
        SVG_HEIGHT - MARGIN_Y + 18.0,
        "middle",
        &format_number(x1),
    );
    label(
        &mut svg,
        MARGIN_LEFT - 6.0,
        py(y0) + 4.0,
        "end",
        &format_number(y0),
    );
    label(
        &mut svg,
        MARGIN_LEFT - 6.0,
        py(y1) + 4.0,
        "end",
        &format_number(y1),
    );
    label(
        &mut svg,
        MARGIN_LEFT + plot_w / 2.0,
        SVG_HEIGHT - 8.0,
        "middle",
        header[0],
    );

    for (k, &j) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, svg: &mut String| {
            if segment.len() > 1 {
                let _ = writeln!(
                    svg,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    segment.join(" ")
                );
            }
            segment.clear();
        };
        for r in &picked {
            match (r[0], r[j]) {
                (Some(x), Some(y)) => segment.push(format!("{:.2},{:.2}", px(x), py(y))),
                _ => flush(&mut segment, &mut svg),
            }
        }
        flush(&mut segment, &mut svg);
        let ly = MARGIN_Y + 16.0 + 18.0 * k as f64;
        let lx = SVG_WIDTH - MARGIN_RIGHT + 12.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        label(&mut svg, lx + 26.0, ly + 4.0, "start", header[j]);
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
