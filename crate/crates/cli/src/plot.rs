//! Static SVG line charts of a sweep CSV.
//!
//! Every marker carries the CSV strings it was drawn from as `data-x`/`data-y`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::csv::{ParseError, Table};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(x, y)` as written in the CSV
    pub points: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub file: &'static str,
    pub title: &'static str,
    pub y_label: &'static str,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn column(table: &Table, name: &str) -> Result<usize, ParseError> {
    table.column_index(name).ok_or_else(|| ParseError {
        line: 1,
        message: format!("missing column {name}"),
    })
}

/// One series per column over the rows of the first coefficient set.
fn epsilon_series(table: &Table, names: &[&str]) -> Result<Vec<Series>, ParseError> {
    let eps = column(table, "epsilon")?;
    let first = coefficient_key(table, 0)?;
    let mut out = Vec::new();
    for name in names {
        let idx = column(table, name)?;
        let mut points = Vec::new();
        for (i, row) in table.rows.iter().enumerate() {
            if coefficient_key(table, i)? == first {
                points.push((row[eps].clone(), row[idx].clone()));
            }
        }
        out.push(Series {
            label: name.to_string(),
            points,
        });
    }
    Ok(out)
}

fn coefficient_key(table: &Table, i: usize) -> Result<String, ParseError> {
    let parts = ["alpha", "beta", "gamma"]
        .iter()
        .map(|c| column(table, c).map(|j| table.rows[i][j].clone()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.join(","))
}

fn robin_series(table: &Table) -> Result<Vec<Series>, ParseError> {
    let eps = column(table, "epsilon")?;
    let idx = column(table, "robin_grad_l2")?;
    let mut out: Vec<Series> = Vec::new();
    for (i, row) in table.rows.iter().enumerate() {
        let key = coefficient_key(table, i)?;
        let label = format!("robin_grad_l2 ({})", key.replace(',', " "));
        match out.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((row[eps].clone(), row[idx].clone())),
            None => out.push(Series {
                label,
                points: vec![(row[eps].clone(), row[idx].clone())],
            }),
        }
    }
    Ok(out)
}

/// The four charts of a sweep table.
pub fn charts(table: &Table) -> Result<Vec<Chart>, ParseError> {
    if table.rows.is_empty() {
        return Err(ParseError {
            line: 2,
            message: "no data rows".into(),
        });
    }
    for name in [
        "epsilon",
        "neumann_grad_l2",
        "robin_grad_l2",
        "wente_ratio",
        "grad_V_l21",
        "mprime_l21",
        "f_hminus1",
    ] {
        let values = table.numbers(name)?;
        if name == "epsilon" {
            if let Some(i) = values.iter().position(|v| !(*v > 0.0)) {
                return Err(ParseError {
                    line: table.line_of(i),
                    message: "epsilon must be positive".into(),
                });
            }
        }
    }
    let mut energies = epsilon_series(table, &["neumann_grad_l2"])?;
    energies.extend(robin_series(table)?);
    Ok(vec![
        Chart {
            file: "energies.svg",
            title: "Neumann and Robin energies",
            y_label: "gradient L2 norm",
            series: energies,
        },
        Chart {
            file: "wente_ratio.svg",
            title: "Dirichlet Wente ratio",
            y_label: "(|u|_inf + |grad u|_2) / |grad V|_2^2",
            series: epsilon_series(table, &["wente_ratio"])?,
        },
        Chart {
            file: "lorentz.svg",
            title: "L(2,1) norms",
            y_label: "L(2,1) norm",
            series: epsilon_series(table, &["grad_V_l21", "mprime_l21"])?,
        },
        Chart {
            file: "hminus1.svg",
            title: "H^-1 norm of the Jacobian",
            y_label: "H^-1 norm",
            series: epsilon_series(table, &["f_hminus1"])?,
        },
    ])
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * hi.abs().max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

pub fn render(chart: &Chart) -> String {
    let parse = |s: &String| s.parse::<f64>().unwrap_or(f64::NAN);
    let all = || chart.series.iter().flat_map(|s| s.points.iter());
    let (x_lo, x_hi) = bounds(all().map(|p| parse(&p.0).log10()));
    let (y_lo, y_hi) = bounds(all().map(|p| parse(&p.1)));
    let sx = |x: f64| MARGIN + (x.log10() - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(chart.title)
    );
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        svg,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#
    );
    for decade in (x_lo.ceil() as i32)..=(x_hi.floor() as i32) {
        let x = sx(10f64.powi(decade));
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">1e{decade}</text>"#,
            bottom + 5.0,
            bottom + 18.0
        );
    }
    for i in 0..=4 {
        let y = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let py = sy(y);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{left}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{y:.3e}</text>"#,
            left - 5.0,
            left - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">epsilon</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(chart.y_label)
    );
    for (k, series) in chart.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<(f64, f64)> = series
            .points
            .iter()
            .map(|(x, y)| (sx(parse(x)), sy(parse(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let _ = writeln!(
            svg,
            r#"<g class="series" data-label="{}">"#,
            escape(&series.label)
        );
        if coords.len() > 1 {
            let d: Vec<String> = coords
                .iter()
                .map(|(x, y)| format!("{x:.2},{y:.2}"))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                d.join(" ")
            );
        }
        for (x, y) in &series.points {
            let (px, py) = (sx(parse(x)), sy(parse(y)));
            if px.is_finite() && py.is_finite() {
                let _ = writeln!(
                    svg,
                    r#"<circle class="point" cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}" data-x="{x}" data-y="{y}"/>"#
                );
            }
        }
        let ly = top + 14.0 * k as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{ly:.2}" font-family="sans-serif" font-size="11" fill="{color}" text-anchor="end">{}</text>"#,
            right,
            escape(&series.label)
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug)]
pub enum PlotError {
    Parse(ParseError),
    Io(std::io::Error),
}

impl std::fmt::Display for PlotError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Parse(e) => write!(f, "parse error: {e}"),
            Self::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for PlotError {}

/// Renders every chart before writing anything, so a bad CSV leaves `dir` untouched.
pub fn plot_csv(csv: &Path, dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let text = std::fs::read_to_string(csv).map_err(PlotError::Io)?;
    let table = Table::parse(&text).map_err(PlotError::Parse)?;
    let rendered: Vec<(PathBuf, String)> = charts(&table)
        .map_err(PlotError::Parse)?
        .iter()
        .map(|c| (dir.join(c.file), render(c)))
        .collect();
    std::fs::create_dir_all(dir).map_err(PlotError::Io)?;
    for (path, svg) in &rendered {
        std::fs::write(path, svg).map_err(PlotError::Io)?;
    }
    Ok(rendered.into_iter().map(|(p, _)| p).collect())
}

/// `(data-x, data-y)` of every marker in an SVG written by [`render`].
pub fn embedded_points(svg: &str) -> Vec<(String, String)> {
    let attr = |tag: &str, name: &str| -> Option<String> {
        let start = tag.find(&format!("{name}=\""))? + name.len() + 2;
        let end = tag[start..].find('"')? + start;
        Some(tag[start..end].to_string())
    };
    svg.lines()
        .filter(|l| l.contains(r#"class="point""#))
        .filter_map(|l| Some((attr(l, "data-x")?, attr(l, "data-y")?)))
        .collect()
}
