//! Self-contained SVG 1.1 plots: log-log survival curves with an optional
//! vertical marker and a linear-axes inset.

use std::fmt::Write as _;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 5] = ["#1f4e9c", "#c0392b", "#27864a", "#8e44ad", "#d68910"];

pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// Vertical line at `x` with a text label.
pub struct Marker {
    pub x: f64,
    pub label: String,
}

/// Small linear-axes panel in the lower-left corner, above the legend.
pub struct Inset {
    pub title: String,
    pub points: Vec<(f64, f64)>,
}

/// Log-log plot; the axes span whole decades around the first curve, the
/// other curves are clipped to them and the first curve is drawn on top.
pub struct LogLogPlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub curves: Vec<Curve>,
    pub marker: Option<Marker>,
    pub inset: Option<Inset>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn decade_range(values: impl Iterator<Item = f64>) -> Option<(i32, i32)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite() && *v > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    let a = lo.log10().floor() as i32;
    let b = (hi.log10().ceil() as i32).max(a + 1);
    Some((a, b))
}

/// Label every decade up to ten decades, then every second, third, ...
fn label_step(decades: i32) -> i32 {
    ((decades + 9) / 10).max(1)
}

fn power_label(out: &mut String, x: f64, y: f64, anchor: &str, k: i32) {
    let _ = writeln!(
        out,
        r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}" font-size="13">10<tspan dy="-6" font-size="10">{k}</tspan></text>"#
    );
}

impl LogLogPlot {
    pub fn render(&self) -> String {
        let first = self.curves.first().map(|c| c.points.as_slice()).unwrap_or(&[]);
        let xs = first.iter().map(|p| p.0);
        let ys = first.iter().map(|p| p.1);
        let (x0, x1) = decade_range(xs).unwrap_or((-1, 1));
        let (y0, y1) = decade_range(ys).unwrap_or((-1, 0));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x.log10() - x0 as f64) / (x1 - x0) as f64 * pw;
        let sy = |y: f64| TOP + (y1 as f64 - y.log10()) / (y1 - y0) as f64 * ph;

        let mut out = String::new();
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );

        let _ = writeln!(out, r##"<g id="x-axis" stroke="#999" stroke-width="0.5">"##);
        for k in x0..=x1 {
            let x = sx(10f64.powi(k));
            let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}"/>"#, TOP + ph);
        }
        let _ = writeln!(out, "</g>");
        let _ = writeln!(out, r##"<g id="y-axis" stroke="#999" stroke-width="0.5">"##);
        for k in y0..=y1 {
            let y = sy(10f64.powi(k));
            let _ = writeln!(out, r#"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#, LEFT + pw);
        }
        let _ = writeln!(out, "</g>");
        for k in (x0..=x1).filter(|k| (k - x0) % label_step(x1 - x0) == 0) {
            power_label(&mut out, sx(10f64.powi(k)), TOP + ph + 20.0, "middle", k);
        }
        for k in (y0..=y1).filter(|k| (y1 - k) % label_step(y1 - y0) == 0) {
            power_label(&mut out, LEFT - 8.0, sy(10f64.powi(k)) + 4.0, "end", k);
        }
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text id="x-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 20.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text id="y-label" x="24" y="{:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 24 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        let (xmin, xmax) = (10f64.powi(x0), 10f64.powi(x1));
        let (ymin, ymax) = (10f64.powi(y0), 10f64.powi(y1));
        for (k, c) in self.curves.iter().enumerate().rev() {
            let color = PALETTE[k % PALETTE.len()];
            let stroke = if k == 0 { 1.6 } else { 1.0 };
            let mut path = String::new();
            let mut pen_down = false;
            for &(x, y) in &c.points {
                let inside = x.is_finite() && y.is_finite() && x >= xmin && x <= xmax && y >= ymin && y <= ymax;
                if !inside {
                    pen_down = false;
                    continue;
                }
                let _ = write!(path, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(x), sy(y));
                pen_down = true;
            }
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{color}" stroke-width="{stroke}"><title>{}</title></path>"#,
                path.trim_end(),
                escape(&c.label)
            );
            let ly = TOP + ph - 16.0 - 18.0 * (self.curves.len() - 1 - k) as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
                LEFT + 14.0,
                LEFT + 40.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="12">{}</text>"#,
                LEFT + 46.0,
                ly + 4.0,
                escape(&c.label)
            );
        }

        if let Some(m) = &self.marker {
            if m.x >= xmin && m.x <= xmax {
                let x = sx(m.x);
                let _ = writeln!(out, r#"<g id="t-r-marker">"#);
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}" stroke="black" stroke-dasharray="5,4"/>"#,
                    TOP + ph
                );
                let _ = writeln!(
                    out,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="13">{}</text>"#,
                    x - 4.0,
                    TOP + ph - 60.0,
                    escape(&m.label)
                );
                let _ = writeln!(out, "</g>");
            }
        }
        if let Some(inset) = &self.inset {
            render_inset(&mut out, inset, LEFT + pw * 0.03, TOP + ph * 0.5, pw * 0.37, ph * 0.33);
        }
        let _ = writeln!(out, "</svg>");
        out
    }
}

fn render_inset(out: &mut String, inset: &Inset, x: f64, y: f64, w: f64, h: f64) {
    let pts: Vec<(f64, f64)> = inset.points.iter().copied().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    let _ = writeln!(out, r#"<g id="inset">"#);
    let _ =
        writeln!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="white" stroke="black"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="11">{}</text>"#,
        x + w / 2.0,
        y + 13.0,
        escape(&inset.title)
    );
    if pts.len() >= 2 {
        let (tx0, tx1) = (pts[0].0, pts[pts.len() - 1].0);
        let (vy0, vy1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
        let span_y = if vy1 > vy0 { vy1 - vy0 } else { 1.0 };
        let (ix, iy, iw, ih) = (x + 8.0, y + 20.0, w - 16.0, h - 36.0);
        let mut path = String::new();
        for (k, &(t, v)) in pts.iter().enumerate() {
            let px = ix + (t - tx0) / (tx1 - tx0) * iw;
            let py = iy + (vy1 - v) / span_y * ih;
            let _ = write!(path, "{}{px:.2},{py:.2} ", if k == 0 { "M" } else { "L" });
        }
        let _ = writeln!(out, r##"<path d="{}" fill="none" stroke="#1f4e9c" stroke-width="1"/>"##, path.trim_end());
        let _ = writeln!(out, r#"<text x="{ix:.2}" y="{:.2}" font-size="10">t = {tx0:.1}</text>"#, y + h - 4.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">t = {tx1:.1}</text>"#,
            ix + iw,
            y + h - 4.0
        );
    }
    let _ = writeln!(out, "</g>");
}
