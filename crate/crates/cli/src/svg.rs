//! Minimal line-plot emitter. Coordinates are printed with fixed precision
//! so identical inputs give identical files.

use std::fmt::Write;

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 250.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Clone, Debug)]
struct Series {
    points: Vec<(f64, f64)>,
    stroke: String,
    width: f64,
    dash: Option<&'static str>,
    label: Option<String>,
}

#[derive(Clone, Debug)]
struct Marker {
    at: (f64, f64),
    fill: String,
    label: String,
}

#[derive(Clone, Debug)]
struct Band {
    lower: Vec<(f64, f64)>,
    upper: Vec<(f64, f64)>,
    fill: String,
}

pub struct Figure {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    markers: Vec<Marker>,
    bands: Vec<Band>,
    window: Option<[f64; 4]>,
}

impl Figure {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            markers: Vec::new(),
            bands: Vec::new(),
            window: None,
        }
    }

    /// Fixed `[x0, x1, y0, y1]` view instead of the padded data extent.
    pub fn window(&mut self, bounds: [f64; 4]) -> &mut Self {
        self.window = Some(bounds);
        self
    }

    pub fn line(&mut self, points: Vec<(f64, f64)>, stroke: &str, width: f64, label: Option<&str>) -> &mut Self {
        self.series.push(Series { points, stroke: stroke.into(), width, dash: None, label: label.map(Into::into) });
        self
    }

    pub fn dashed(&mut self, points: Vec<(f64, f64)>, stroke: &str, label: Option<&str>) -> &mut Self {
        self.series.push(Series { points, stroke: stroke.into(), width: 1.5, dash: Some("6 4"), label: label.map(Into::into) });
        self
    }

    pub fn marker(&mut self, at: (f64, f64), fill: &str, label: &str) -> &mut Self {
        self.markers.push(Marker { at, fill: fill.into(), label: label.into() });
        self
    }

    /// Shaded region between two curves sharing their abscissae.
    pub fn band(&mut self, lower: Vec<(f64, f64)>, upper: Vec<(f64, f64)>, fill: &str) -> &mut Self {
        self.bands.push(Band { lower, upper, fill: fill.into() });
        self
    }

    fn bounds(&self) -> [f64; 4] {
        if let Some(w) = self.window {
            return w;
        }
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .chain(self.markers.iter().map(|m| &m.at))
            .chain(self.bands.iter().flat_map(|b| b.lower.iter().chain(b.upper.iter())))
            .filter(|p| p.0.is_finite() && p.1.is_finite());
        let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for &(x, y) in pts {
            b = [b[0].min(x), b[1].max(x), b[2].min(y), b[3].max(y)];
        }
        if !b[0].is_finite() {
            return [0.0, 1.0, 0.0, 1.0];
        }
        for k in [0, 2] {
            let span = b[k + 1] - b[k];
            let pad = if span > 0.0 { 0.04 * span } else { 0.5 * b[k].abs().max(1.0) };
            b[k] -= pad;
            b[k + 1] += pad;
        }
        b
    }

    pub fn render(&self) -> String {
        let [x0, x1, y0, y1] = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;
        let path = |pts: &[(f64, f64)]| {
            pts.iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ =
            writeln!(s, r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath></defs>"#);
        let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
        for b in &self.bands {
            let mut pts = b.lower.clone();
            pts.extend(b.upper.iter().rev());
            let _ = writeln!(s, r#"<polygon points="{}" fill="{}" stroke="none"/>"#, path(&pts), b.fill);
        }
        for line in &self.series {
            let dash = line.dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}"{dash}/>"#,
                path(&line.points),
                line.stroke,
                line.width
            );
        }
        for m in &self.markers {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#, sx(m.at.0), sy(m.at.1), m.fill);
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
        for (v, p) in ticks(x0, x1) {
            let x = sx(v);
            let _ =
                writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
            let _ =
                writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 19.0, tick_label(v, p));
        }
        for (v, p) in ticks(y0, y1) {
            let y = sy(v);
            let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ =
                writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, tick_label(v, p));
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 18.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        let mut ly = TOP + 10.0;
        let lx = WIDTH - RIGHT + 14.0;
        for line in self.series.iter().filter(|l| l.label.is_some()) {
            let dash = line.dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="{}"{dash}/>"#,
                lx + 24.0,
                line.stroke,
                line.width.max(1.5)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 30.0,
                ly + 4.0,
                escape(line.label.as_deref().unwrap_or(""))
            );
            ly += 18.0;
        }
        for m in &self.markers {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{ly:.2}" r="4" fill="{}"/>"#, lx + 12.0, m.fill);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&m.label));
            ly += 18.0;
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Round tick positions (1, 2 or 5 times a power of ten) and their decimals.
fn ticks(lo: f64, hi: f64) -> Vec<(f64, usize)> {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].into_iter().map(|k| k * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| (k as f64 * step, decimals)).collect()
}

fn tick_label(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
