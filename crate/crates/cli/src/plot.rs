//! Minimal SVG line and bar charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub name: String,
    pub points: Vec<[f64; 2]>,
    pub dashed: bool,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<[f64; 2]>) -> Self {
        Series {
            name: name.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Default)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Filled grey boxes `[x0, y0, x1, y1]` drawn under the series.
    pub boxes: Vec<[f64; 4]>,
    /// Use the same scale on both axes.
    pub equal_aspect: bool,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

fn axes(s: &mut String, f: &Frame, x_label: &str, y_label: &str, x_ticks: bool) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(s, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t).unwrap();
    for i in 0..=5 {
        let fy = f.y0 + (f.y1 - f.y0) * i as f64 / 5.0;
        let y = f.py(fy);
        writeln!(s, r##"<line x1="{l}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#ddd"/>"##).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, l - 4.0, y + 4.0, tick(fy)).unwrap();
        if x_ticks {
            let fx = f.x0 + (f.x1 - f.x0) * i as f64 / 5.0;
            let x = f.px(fx);
            writeln!(s, r##"<line x1="{x:.2}" y1="{t}" x2="{x:.2}" y2="{b}" stroke="#ddd"/>"##).unwrap();
            writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, b + 16.0, tick(fx)).unwrap();
        }
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    )
    .unwrap();
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{}", (v * 1000.0).round() / 1000.0)
    }
}

fn legend(s: &mut String, names: &[(String, &str)]) {
    for (i, (name, color)) in names.iter().enumerate() {
        let y = MARGIN + 14.0 + 16.0 * i as f64;
        let x = WIDTH - MARGIN - 150.0;
        writeln!(s, r#"<rect x="{x}" y="{}" width="12" height="4" fill="{color}"/>"#, y - 4.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, x + 18.0, escape(name)).unwrap();
    }
}

impl LineChart {
    pub fn render(&self) -> String {
        let all = self.series.iter().flat_map(|s| s.points.iter().copied());
        let boxes = self.boxes.iter().flat_map(|b| [[b[0], b[1]], [b[2], b[3]]]);
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in all.chain(boxes).filter(|p| p[0].is_finite() && p[1].is_finite()) {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let (mut x0, mut x1) = padded(x0, x1);
        let (mut y0, mut y1) = padded(y0, y1);
        if self.equal_aspect {
            let sx = (x1 - x0) / (WIDTH - 2.0 * MARGIN);
            let sy = (y1 - y0) / (HEIGHT - 2.0 * MARGIN);
            let scale = sx.max(sy);
            let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            x0 = cx - 0.5 * scale * (WIDTH - 2.0 * MARGIN);
            x1 = cx + 0.5 * scale * (WIDTH - 2.0 * MARGIN);
            y0 = cy - 0.5 * scale * (HEIGHT - 2.0 * MARGIN);
            y1 = cy + 0.5 * scale * (HEIGHT - 2.0 * MARGIN);
        }
        let f = Frame { x0, x1, y0, y1 };

        let mut s = header(&self.title);
        axes(&mut s, &f, &self.x_label, &self.y_label, true);
        for b in &self.boxes {
            let (px0, px1) = (f.px(b[0]), f.px(b[2]));
            let (py0, py1) = (f.py(b[3]), f.py(b[1]));
            writeln!(
                s,
                r##"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="#888"/>"##,
                px1 - px0,
                py1 - py0
            )
            .unwrap();
        }
        let mut names = Vec::new();
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = series
                .points
                .iter()
                .filter(|p| p[0].is_finite() && p[1].is_finite())
                .map(|p| format!("{:.2},{:.2}", f.px(p[0]), f.py(p[1])))
                .collect();
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                pts.join(" ")
            )
            .unwrap();
            names.push((series.name.clone(), color));
        }
        legend(&mut s, &names);
        s.push_str("</svg>\n");
        s
    }
}

/// Grouped bars: one group per category, one bar per named value set.
pub struct BarChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub categories: Vec<String>,
    pub groups: Vec<(String, Vec<f64>)>,
}

impl BarChart {
    pub fn render(&self) -> String {
        let top = self
            .groups
            .iter()
            .flat_map(|g| g.1.iter().copied())
            .filter(|v| v.is_finite())
            .fold(0.0f64, f64::max);
        let f = Frame {
            x0: 0.0,
            x1: 1.0,
            y0: 0.0,
            y1: if top > 0.0 { top * 1.1 } else { 1.0 },
        };
        let mut s = header(&self.title);
        axes(&mut s, &f, &self.x_label, &self.y_label, false);
        let n = self.categories.len().max(1) as f64;
        let slot = (WIDTH - 2.0 * MARGIN) / n;
        let bar = 0.8 * slot / self.groups.len().max(1) as f64;
        let mut names = Vec::new();
        for (c, cat) in self.categories.iter().enumerate() {
            let left = MARGIN + slot * c as f64 + 0.1 * slot;
            writeln!(
                s,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                MARGIN + slot * (c as f64 + 0.5),
                HEIGHT - MARGIN + 16.0,
                escape(cat)
            )
            .unwrap();
            for (g, (_, values)) in self.groups.iter().enumerate() {
                let v = values.get(c).copied().unwrap_or(f64::NAN);
                if !v.is_finite() {
                    continue;
                }
                let y = f.py(v.max(0.0));
                writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{y:.2}" width="{bar:.2}" height="{:.2}" fill="{}"/>"#,
                    left + bar * g as f64,
                    HEIGHT - MARGIN - y,
                    PALETTE[g % PALETTE.len()]
                )
                .unwrap();
            }
        }
        for (g, (name, _)) in self.groups.iter().enumerate() {
            names.push((name.clone(), PALETTE[g % PALETTE.len()]));
        }
        legend(&mut s, &names);
        s.push_str("</svg>\n");
        s
    }
}
