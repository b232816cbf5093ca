//! CSV tables with run metadata headers, and SVG rendering.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

pub const DB_CONVENTIONS: &str =
    "gain_db = 10*log10(G); snr_db_amp = 10*log10(SNR) and advantage_db_amp = 10*log10(SNR_q/SNR_cl) on amplitude SNR";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Bool(b) => Some(f64::from(u8::from(*b))),
            Cell::Text(_) => None,
        }
    }

    fn render(&self, precision: usize) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:.precision$e}"),
            Cell::Num(v) if v.is_nan() => "nan".into(),
            Cell::Num(v) => if *v > 0.0 { "inf".into() } else { "-inf".into() },
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DataTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl DataTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column(name)?;
        self.rows.iter().map(|r| r[i].as_f64()).collect()
    }
}

/// Run metadata written as `#` comment lines above the CSV header.
#[derive(Debug, Clone)]
pub struct Metadata {
    pub command: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    pub effective_config: String,
}

pub fn render_csv(meta: &Metadata, table: &DataTable, precision: usize) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "# qcomb {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(out, "# command: {}", meta.command)?;
    writeln!(out, "# config_hash: {}", meta.config_hash)?;
    match meta.seed {
        Some(seed) => writeln!(out, "# seed: {seed}")?,
        None => writeln!(out, "# seed: none")?,
    }
    if let Some(rng) = &meta.rng {
        writeln!(out, "# rng: {rng}")?;
    }
    writeln!(out, "# conventions: {DB_CONVENTIONS}")?;
    writeln!(out, "# effective config:")?;
    for line in meta.effective_config.lines() {
        if line.is_empty() {
            writeln!(out, "#")?;
        } else {
            writeln!(out, "#   {line}")?;
        }
    }

    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer.write_record(&table.columns)?;
    for row in &table.rows {
        writer.write_record(row.iter().map(|c| c.render(precision)))?;
    }
    out.push_str(std::str::from_utf8(&writer.into_inner()?)?);
    Ok(out)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f4e9c", "#c2185b", "#2e7d32", "#ef6c00", "#6a1b9a", "#00838f", "#5d4037", "#455a64",
];

#[derive(Debug, Clone, Copy)]
struct Axis {
    min: f64,
    max: f64,
    log: bool,
    from_px: f64,
    to_px: f64,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool, from_px: f64, to_px: f64) -> Self {
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() {
            (min, max) = (0.0, 1.0);
        }
        if min == max {
            let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.1 };
            if log {
                (min, max) = (min / 2.0, max * 2.0);
            } else {
                (min, max) = (min - pad, max + pad);
            }
        }
        Self { min, max, log, from_px, to_px }
    }

    fn t(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.min.log10()) / (self.max.log10() - self.min.log10())
        } else {
            (v - self.min) / (self.max - self.min)
        }
    }

    fn px(&self, v: f64) -> f64 {
        self.from_px + (self.to_px - self.from_px) * self.t(v)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.min.log10().ceil() as i32, self.max.log10().floor() as i32);
            let step = ((b - a) / 6).max(1);
            let mut out: Vec<f64> = (a..=b).step_by(step as usize).map(|e| 10f64.powi(e)).collect();
            if out.is_empty() {
                out = vec![self.min, self.max];
            }
            out
        } else {
            (0..=5).map(|i| self.min + (self.max - self.min) * i as f64 / 5.0).collect()
        }
    }
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(svg: &mut String, x: &Axis, y: &Axis, x_name: &str, y_name: &str) {
    let (l, r) = (MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let (t, b) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    let _ = writeln!(svg, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for v in x.ticks() {
        let px = x.px(v);
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{}" font-size="11" text-anchor="middle">{}</text>"#, b + 18.0, label(v));
    }
    for v in y.ticks() {
        let py = y.px(v);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" font-size="11" text-anchor="end">{}</text>"#, l - 8.0, py + 4.0, label(v));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#, (l + r) / 2.0, HEIGHT - 15.0, escape(x_name));
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{0}" font-size="13" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
        (t + b) / 2.0,
        escape(y_name)
    );
}

fn open_svg() -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    svg
}

/// One polyline per distinct value of `series` (or a single line).
pub fn line_plot(
    table: &DataTable,
    x_col: &str,
    y_col: &str,
    series_col: Option<&str>,
    x_log: bool,
) -> Result<String> {
    let xs = table.values(x_col).with_context(|| format!("no numeric column '{x_col}'"))?;
    let ys = table.values(y_col).with_context(|| format!("no numeric column '{y_col}'"))?;
    let series = match series_col {
        Some(c) => table.values(c).with_context(|| format!("no numeric column '{c}'"))?,
        None => vec![0.0; xs.len()],
    };
    let mut keys: Vec<f64> = Vec::new();
    for s in &series {
        if !keys.contains(s) {
            keys.push(*s);
        }
    }
    let x = Axis::new(xs.iter().copied(), x_log, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Axis::new(ys.iter().copied(), false, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);

    let mut svg = open_svg();
    frame(&mut svg, &x, &y, x_col, y_col);
    for (k, key) in keys.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut points = String::new();
        for i in (0..xs.len()).filter(|&i| series[i] == *key) {
            if xs[i].is_finite() && ys[i].is_finite() && (!x_log || xs[i] > 0.0) {
                let _ = write!(points, "{:.2},{:.2} ", x.px(xs[i]), y.px(ys[i]));
            }
        }
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="1.8"/>"#,
            points.trim_end()
        );
        if let Some(name) = series_col {
            let ly = MARGIN_TOP + 18.0 * (k as f64 + 1.0);
            let lx = WIDTH - MARGIN_RIGHT + 12.0;
            let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#, lx + 18.0);
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="11">{} = {}</text>"#,
                lx + 22.0,
                ly + 4.0,
                escape(name),
                label(*key)
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn colour(t: f64) -> String {
    // dark blue → teal → yellow
    let stops = [(0.0, [68.0, 1.0, 84.0]), (0.5, [33.0, 145.0, 140.0]), (1.0, [253.0, 231.0, 37.0])];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let (a, b) = if t <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let u = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + (b.1[i] - a.1[i]) * u).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heat map of `z` on the grid spanned by two sweep axes.
pub fn heat_map(
    table: &DataTable,
    x_col: &str,
    y_col: &str,
    z_col: &str,
    x_log: bool,
    y_log: bool,
) -> Result<String> {
    let xs = table.values(x_col).with_context(|| format!("no numeric column '{x_col}'"))?;
    let ys = table.values(y_col).with_context(|| format!("no numeric column '{y_col}'"))?;
    let zs = table.values(z_col).with_context(|| format!("no numeric column '{z_col}'"))?;
    let distinct = |v: &[f64]| {
        let mut d: Vec<f64> = Vec::new();
        for x in v {
            if !d.contains(x) {
                d.push(*x);
            }
        }
        d
    };
    let (gx, gy) = (distinct(&xs), distinct(&ys));
    let x = Axis::new(gx.iter().copied(), x_log, MARGIN_LEFT, WIDTH - MARGIN_RIGHT);
    let y = Axis::new(gy.iter().copied(), y_log, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP);
    let finite: Vec<f64> = zs.iter().copied().filter(|z| z.is_finite()).collect();
    let zmin = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if zmax > zmin { zmax - zmin } else { 1.0 };

    // cell edges halfway between neighbouring grid values
    let edges = |g: &[f64], axis: &Axis| -> Vec<(f64, f64, f64)> {
        let mut sorted = g.to_vec();
        sorted.sort_by(f64::total_cmp);
        let px: Vec<f64> = sorted.iter().map(|v| axis.px(*v)).collect();
        (0..sorted.len())
            .map(|i| {
                let lo = if i == 0 { px[0] - (px.get(1).copied().unwrap_or(px[0] + 10.0) - px[0]) / 2.0 } else { (px[i - 1] + px[i]) / 2.0 };
                let hi = if i + 1 == px.len() {
                    px[i] + (px[i] - px.get(i.wrapping_sub(1)).copied().unwrap_or(px[i] - 10.0)) / 2.0
                } else {
                    (px[i] + px[i + 1]) / 2.0
                };
                (sorted[i], lo.min(hi), lo.max(hi))
            })
            .collect()
    };
    let (ex, ey) = (edges(&gx, &x), edges(&gy, &y));
    let find = |e: &[(f64, f64, f64)], v: f64| e.iter().find(|c| c.0 == v).map(|c| (c.1, c.2));

    let mut svg = open_svg();
    let _ = writeln!(
        svg,
        r#"<clipPath id="plot"><rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}"/></clipPath><g clip-path="url(#plot)">"#,
        WIDTH - MARGIN_RIGHT - MARGIN_LEFT,
        HEIGHT - MARGIN_BOTTOM - MARGIN_TOP
    );
    for i in 0..xs.len() {
        let (Some((x0, x1)), Some((y0, y1))) = (find(&ex, xs[i]), find(&ey, ys[i])) else {
            continue;
        };
        let _ = writeln!(
            svg,
            r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            x1 - x0 + 0.3,
            y1 - y0 + 0.3,
            colour((zs[i] - zmin) / span)
        );
    }
    svg.push_str("</g>\n");
    frame(&mut svg, &x, &y, x_col, y_col);

    let bar_x = WIDTH - MARGIN_RIGHT + 20.0;
    let (top, bottom) = (MARGIN_TOP, HEIGHT - MARGIN_BOTTOM);
    for k in 0..50 {
        let t0 = k as f64 / 50.0;
        let py = bottom - (bottom - top) * (t0 + 0.02);
        let _ = writeln!(
            svg,
            r#"<rect x="{bar_x}" y="{py:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            (bottom - top) / 50.0 + 0.3,
            colour(t0)
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11">{}</text>"#, bar_x + 24.0, top + 10.0, label(zmax));
    let _ = writeln!(svg, r#"<text x="{}" y="{bottom}" font-size="11">{}</text>"#, bar_x + 24.0, label(zmin));
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
        bar_x,
        top - 10.0,
        escape(z_col)
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}
