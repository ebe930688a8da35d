//! JSON reports, curve CSVs and SVG renderings.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::profile::Profile;
use crate::{Error, Result};

pub const REPORT_FORMAT: &str = "motrims-report 1.0";

/// Wraps `body` as `{"format": ..., "kind": ..., ...body}` and writes it.
pub fn write_json(path: &Path, kind: &str, body: &impl Serialize) -> Result<()> {
    let mut value = serde_json::json!({ "format": REPORT_FORMAT, "kind": kind });
    let body = serde_json::to_value(body).map_err(|e| Error::Data(format!("{kind} report: {e}")))?;
    match body {
        serde_json::Value::Object(m) => {
            value.as_object_mut().expect("object").extend(m);
        }
        other => {
            value["data"] = other;
        }
    }
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| Error::Data(format!("{kind} report: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Columns of equal length under the given names.
pub fn write_columns(path: &Path, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    if names.len() != columns.len() || columns.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(Error::Data("column names and lengths disagree".into()));
    }
    let mut s = names.join(",");
    s.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| c[i].to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn write_profile(path: &Path, x_name: &str, y_name: &str, p: &Profile) -> Result<()> {
    write_columns(path, &[x_name, y_name], &[&p.x, &p.y])
}

/// Reads a two-column CSV curve with a header row.
pub fn read_profile(path: &Path) -> Result<Profile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Data(format!("{}: line {}: bad number {s:?}", path.display(), i + 1)))
        };
        if f.len() < 2 {
            return Err(Error::Data(format!(
                "{}: line {}: expected two columns",
                path.display(),
                i + 1
            )));
        }
        x.push(num(f[0])?);
        y.push(num(f[1])?);
    }
    Profile::new(x, y)
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn svg_header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(s: &mut String, x_label: &str, y_label: &str, xr: (f64, f64), yr: (f64, f64)) {
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN / 2.0, MARGIN / 1.5);
    let _ = writeln!(
        s,
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = xr.0 + f * (xr.1 - xr.0);
        let yv = yr.0 + f * (yr.1 - yr.0);
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            x0 + f * (x1 - x0),
            y0 + 16.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            x0 - 4.0,
            y0 - f * (y0 - y1) + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        "<text x=\"14\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 {:.1})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

/// Line plot of one or more curves; points-only series draw as markers.
pub fn svg_curves(title: &str, x_label: &str, y_label: &str, series: &[(&str, &Profile, bool)]) -> String {
    let xr = range(series.iter().flat_map(|(_, p, _)| p.x.iter().copied()));
    let yr = range(series.iter().flat_map(|(_, p, _)| p.y.iter().copied()).chain([0.0]));
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN / 2.0, MARGIN / 1.5);
    let sx = |x: f64| x0 + (x - xr.0) / (xr.1 - xr.0) * (x1 - x0);
    let sy = |y: f64| y0 - (y - yr.0) / (yr.1 - yr.0) * (y0 - y1);
    let colors = ["#1f4e9c", "#c0392b", "#27864a", "#7d3c98"];
    let mut s = svg_header(title);
    frame(&mut s, x_label, y_label, xr, yr);
    for (k, (name, p, line)) in series.iter().enumerate() {
        let c = colors[k % colors.len()];
        if *line {
            let pts: Vec<String> =
                p.x.iter()
                    .zip(&p.y)
                    .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
            let _ = writeln!(
                s,
                "<polyline fill=\"none\" stroke=\"{c}\" stroke-width=\"1.5\" points=\"{}\"/>",
                pts.join(" ")
            );
        } else {
            for (&x, &y) in p.x.iter().zip(&p.y) {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{c}\"/>",
                    sx(x),
                    sy(y)
                );
            }
        }
        let _ = writeln!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{c}\">{}</text>",
            x1 - 120.0,
            y1 + 16.0 + 15.0 * k as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Fixed colormap, dark blue through teal and yellow.
fn colormap(t: f64) -> (u8, u8, u8) {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * 4.0;
    let i = (t.floor() as usize).min(3);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |u: f64, v: f64| (u + (v - u) * f).round() as u8;
    (mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heat map of a row-major grid: rows along `y_axis`, columns along `x_axis`.
pub fn svg_map(
    title: &str,
    x_axis: (&str, f64, f64, usize),
    y_axis: (&str, f64, f64, usize),
    values: &[f64],
) -> String {
    let (nx, ny) = (x_axis.3, y_axis.3);
    let max = values.iter().cloned().fold(0.0, f64::max);
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN / 2.0, MARGIN / 1.5);
    let cw = (x1 - x0) / nx as f64;
    let ch = (y0 - y1) / ny as f64;
    let mut s = svg_header(title);
    for r in 0..ny {
        for c in 0..nx {
            let v = values[r * nx + c];
            let (red, g, b) = colormap(if max > 0.0 { v / max } else { 0.0 });
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#{red:02x}{g:02x}{b:02x}\"/>",
                x0 + c as f64 * cw,
                y0 - (r + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    frame(&mut s, x_axis.0, y_axis.0, (x_axis.1, x_axis.2), (y_axis.1, y_axis.2));
    s.push_str("</svg>\n");
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
