//! Minimal hand-written SVG plots on a fixed 800x600 canvas.

use std::fmt::Write as _;

use pitchfork_core::stability::StabilityKind;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 610.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 540.0;

pub fn class_color(kind: StabilityKind) -> &'static str {
    match kind {
        StabilityKind::Sink => "#1f77b4",
        StabilityKind::Saddle => "#d62728",
        StabilityKind::Source => "#ff7f0e",
        StabilityKind::Degenerate => "#7f7f7f",
        StabilityKind::NonhyperbolicComplex => "#9467bd",
    }
}

const LEGEND: [StabilityKind; 5] = [
    StabilityKind::Sink,
    StabilityKind::Saddle,
    StabilityKind::Source,
    StabilityKind::Degenerate,
    StabilityKind::NonhyperbolicComplex,
];

/// Round tick positions covering `[lo, hi]`, about `target` of them.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> (Vec<f64>, f64) {
    let raw = (hi - lo) / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    let ticks = (first..=last).map(|k| k as f64 * step).collect();
    (ticks, step)
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-')
        .chars()
        .all(|c| c == '0' || c == '.')
    {
        format!("{:.decimals$}", 0.0)
    } else {
        s
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo <= f64::EPSILON * (1.0 + lo.abs().max(hi.abs())) {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

pub struct Plot {
    x: (f64, f64),
    y: (f64, f64),
    body: String,
}

impl Plot {
    /// Data ranges are padded by 5% unless `exact`.
    pub fn new(x: (f64, f64), y: (f64, f64), exact: bool) -> Self {
        let (x, y) = if exact {
            (x, y)
        } else {
            (padded(x.0, x.1), padded(y.0, y.1))
        };
        Plot {
            x,
            y,
            body: String::new(),
        }
    }

    fn sx(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (RIGHT - LEFT)
    }

    fn sy(&self, v: f64) -> f64 {
        BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (BOTTOM - TOP)
    }

    pub fn polyline(&mut self, points: &[[f64; 2]], stroke: &str) {
        let coords: Vec<String> = points
            .iter()
            .map(|p| format!("{:.2},{:.2}", self.sx(p[0]), self.sy(p[1])))
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5" clip-path="url(#plot-area)"/>"#,
            coords.join(" ")
        );
    }

    pub fn marker(&mut self, p: [f64; 2], kind: StabilityKind) {
        let (x, y) = (self.sx(p[0]), self.sy(p[1]));
        if (LEFT..=RIGHT).contains(&x) && (TOP..=BOTTOM).contains(&y) {
            let _ = writeln!(
                self.body,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}" class="{}"/>"#,
                class_color(kind),
                kind.as_str()
            );
        }
    }

    pub fn finish(self, title: &str, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(
            s,
            r#"<defs><clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath></defs>"#,
            RIGHT - LEFT,
            BOTTOM - TOP
        );
        let _ = writeln!(
            s,
            r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#,
            (LEFT + RIGHT) / 2.0,
            escape(title)
        );

        // axes
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{BOTTOM}" stroke="black"/>"#
        );
        let (xt, xstep) = nice_ticks(self.x.0, self.x.1, 8);
        for t in xt {
            let x = self.sx(t);
            let _ = writeln!(
                s,
                r#"<line x1="{x:.2}" y1="{BOTTOM}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
                BOTTOM + 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
                BOTTOM + 20.0,
                tick_label(t, xstep)
            );
        }
        let (yt, ystep) = nice_ticks(self.y.0, self.y.1, 8);
        for t in yt {
            let y = self.sy(t);
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
                LEFT - 5.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
                LEFT - 8.0,
                y + 4.0,
                tick_label(t, ystep)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (LEFT + RIGHT) / 2.0,
            BOTTOM + 45.0,
            escape(x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="25" y="{0}" text-anchor="middle" transform="rotate(-90 25 {0})">{1}</text>"#,
            (TOP + BOTTOM) / 2.0,
            escape(y_label)
        );

        s.push_str(&self.body);

        let lx = RIGHT + 25.0;
        for (i, kind) in LEGEND.iter().enumerate() {
            let y = TOP + 20.0 + 22.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<circle cx="{lx}" cy="{y}" r="5" fill="{}"/>"#,
                class_color(*kind)
            );
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}">{}</text>"#,
                lx + 12.0,
                y + 4.0,
                kind.as_str()
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
