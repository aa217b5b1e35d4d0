//! Standalone SVG line plots and step histograms.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#7f7f7f"];

#[derive(Debug, Clone, PartialEq)]
pub enum Style {
    Line,
    /// Markers with optional symmetric error bars.
    Points {
        errors: Option<Vec<f64>>,
    },
    /// Histogram; `xs` are left bin edges and the last bin spans `width`.
    Steps {
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub style: Style,
}

impl Series {
    pub fn line(label: &str, xs: Vec<f64>, ys: Vec<f64>) -> Self {
        Self { label: label.into(), xs, ys, style: Style::Line }
    }

    pub fn points(label: &str, xs: Vec<f64>, ys: Vec<f64>, errors: Option<Vec<f64>>) -> Self {
        Self { label: label.into(), xs, ys, style: Style::Points { errors } }
    }

    pub fn steps(label: &str, edges: Vec<f64>, ys: Vec<f64>, width: f64) -> Self {
        Self { label: label.into(), xs: edges, ys, style: Style::Steps { width } }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), log_x: false, series: Vec::new() }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn with(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }

    fn x_extent(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.series {
            for &x in &s.xs {
                if self.log_x && x <= 0.0 {
                    continue;
                }
                lo = lo.min(x);
                hi = hi.max(x);
            }
            if let (Style::Steps { width }, Some(&last)) = (&s.style, s.xs.last()) {
                hi = hi.max(last + width);
            }
        }
        pad(lo, hi, self.log_x)
    }

    fn y_extent(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.series {
            let errs = match &s.style {
                Style::Points { errors: Some(e) } => Some(e),
                _ => None,
            };
            for (i, &y) in s.ys.iter().enumerate() {
                if !y.is_finite() {
                    continue;
                }
                let e = errs.and_then(|e| e.get(i)).copied().filter(|e| e.is_finite()).unwrap_or(0.0);
                lo = lo.min(y - e);
                hi = hi.max(y + e);
            }
            if matches!(s.style, Style::Steps { .. }) {
                lo = lo.min(0.0);
            }
        }
        pad(lo, hi, false)
    }

    pub fn render(&self) -> String {
        let (x0, x1) = self.x_extent();
        let (y0, y1) = self.y_extent();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let tx = |x: f64| {
            let f =
                if self.log_x { (x.log10() - x0.log10()) / (x1.log10() - x0.log10()) } else { (x - x0) / (x1 - x0) };
            LEFT + f * pw
        };
        let ty = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            esc(&self.title)
        );

        // axes and ticks
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        let xticks = if self.log_x { log_ticks(x0, x1) } else { nice_ticks(x0, x1) };
        for t in xticks {
            let x = tx(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#e0e0e0"/>"##, TOP + ph);
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                TOP + ph + 16.0,
                tick_label(t)
            );
        }
        for t in nice_ticks(y0, y1) {
            let y = ty(t);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#e0e0e0"/>"##, LEFT + pw);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 18.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{0}" text-anchor="middle" transform="rotate(-90 20 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            esc(&self.y_label)
        );

        for (k, series) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .xs
                .iter()
                .zip(&series.ys)
                .filter(|(x, y)| y.is_finite() && (!self.log_x || **x > 0.0))
                .map(|(&x, &y)| (x, y))
                .collect();
            match &series.style {
                Style::Line => {
                    let d = path(pts.iter().map(|&(x, y)| (tx(x), ty(y))));
                    let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.8"/>"#);
                    if pts.len() == 1 {
                        let (x, y) = pts[0];
                        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, tx(x), ty(y));
                    }
                }
                Style::Points { errors } => {
                    for (i, &(x, y)) in pts.iter().enumerate() {
                        let (cx, cy) = (tx(x), ty(y));
                        if let Some(e) = errors.as_ref().and_then(|e| e.get(i)).filter(|e| e.is_finite()) {
                            let _ = writeln!(
                                s,
                                r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="{color}"/>"#,
                                ty(y - e),
                                ty(y + e)
                            );
                        }
                        let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5" fill="{color}"/>"#);
                    }
                }
                Style::Steps { width } => {
                    let mut corners = Vec::with_capacity(2 * pts.len() + 2);
                    if let Some(&(x, _)) = pts.first() {
                        corners.push((tx(x), ty(0.0)));
                    }
                    for (i, &(x, y)) in pts.iter().enumerate() {
                        let right = pts.get(i + 1).map_or(x + width, |p| p.0);
                        corners.push((tx(x), ty(y)));
                        corners.push((tx(right), ty(y)));
                    }
                    if let Some(&(x, _)) = pts.last() {
                        corners.push((tx(x + width), ty(0.0)));
                    }
                    let _ = writeln!(
                        s,
                        r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
                        path(corners.into_iter())
                    );
                }
            }
            let ly = TOP + 14.0 + 20.0 * k as f64;
            let lx = WIDTH - RIGHT + 14.0;
            let _ = writeln!(s, r#"<rect x="{lx}" y="{}" width="14" height="4" fill="{color}"/>"#, ly - 6.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 20.0, esc(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn pad(lo: f64, hi: f64, log: bool) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return if log { (1.0, 10.0) } else { (0.0, 1.0) };
    }
    if log {
        if hi <= lo {
            return (lo / 2.0, hi * 2.0);
        }
        let f = (hi / lo).powf(0.03);
        return (lo / f, hi * f);
    }
    if hi <= lo {
        let d = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - d, hi + d);
    }
    let d = (hi - lo) * 0.05;
    (lo - d, hi + d)
}

fn path(points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.enumerate() {
        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { 'M' } else { 'L' });
    }
    d.trim_end().to_string()
}

/// Ticks at 1, 2 or 5 times a power of ten, about six per axis.
fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let decades: Vec<f64> = (lo.log10().ceil() as i32..=hi.log10().floor() as i32).map(|p| 10f64.powi(p)).collect();
    if decades.len() >= 2 {
        decades
    } else {
        nice_ticks(lo, hi).into_iter().filter(|t| *t > 0.0).collect()
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        return format!("{v:.0e}");
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
