//! Static SVG figures on a fixed 600×480 canvas.
//!
//! Colors come from an 8-stop viridis ramp, linearly interpolated in sRGB:
//! `#440154 #46327e #365c8d #277f8e #1fa187 #4ac16d #a0da39 #fde725`.

use std::fmt::Write;

pub const WIDTH: f64 = 600.0;
pub const HEIGHT: f64 = 480.0;

const VIRIDIS: [(u8, u8, u8); 8] = [
    (0x44, 0x01, 0x54),
    (0x46, 0x32, 0x7e),
    (0x36, 0x5c, 0x8d),
    (0x27, 0x7f, 0x8e),
    (0x1f, 0xa1, 0x87),
    (0x4a, 0xc1, 0x6d),
    (0xa0, 0xda, 0x39),
    (0xfd, 0xe7, 0x25),
];

/// Ramp color for `t ∈ [0, 1]` (clamped). NaN maps to grey.
pub fn viridis(t: f64) -> String {
    if t.is_nan() {
        return "#bbbbbb".into();
    }
    let x = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (x.floor() as usize).min(VIRIDIS.len() - 2);
    let f = x - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |u: u8, v: u8| (u as f64 + (v as f64 - u as f64) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn header(out: &mut String, title: &str, timestamp: Option<&str>) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    if let Some(ts) = timestamp {
        let _ = writeln!(out, "<metadata>generated {ts}</metadata>");
    }
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Grid of `values[row][col]` colored on `[lo, hi]`; rows are drawn bottom
/// to top.
pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_ticks: Vec<String>,
    pub y_ticks: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub range: (f64, f64),
}

impl Heatmap<'_> {
    pub fn render(&self, timestamp: Option<&str>) -> String {
        let mut out = String::new();
        header(&mut out, self.title, timestamp);
        let (left, right, top, bottom) = (70.0, 90.0, 40.0, 60.0);
        let (pw, ph) = (WIDTH - left - right, HEIGHT - top - bottom);
        let rows = self.values.len().max(1);
        let cols = self.values.first().map_or(1, |r| r.len().max(1));
        let (cw, ch) = (pw / cols as f64, ph / rows as f64);
        let (lo, hi) = self.range;
        let span = if hi > lo { hi - lo } else { 1.0 };
        for (i, row) in self.values.iter().enumerate() {
            let y = top + ph - (i + 1) as f64 * ch;
            for (j, &v) in row.iter().enumerate() {
                let x = left + j as f64 * cw;
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{}"><title>{v}</title></rect>"#,
                    viridis((v - lo) / span)
                );
            }
        }
        for (j, t) in self.x_ticks.iter().enumerate() {
            let x = left + (j as f64 + 0.5) * cw;
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, top + ph + 16.0, escape(t));
        }
        for (i, t) in self.y_ticks.iter().enumerate() {
            let y = top + ph - (i as f64 + 0.5) * ch + 4.0;
            let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{}</text>"#, left - 6.0, escape(t));
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            left + pw / 2.0,
            HEIGHT - 18.0,
            escape(self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            top + ph / 2.0,
            top + ph / 2.0,
            escape(self.y_label)
        );
        colorbar(&mut out, WIDTH - right + 20.0, top, ph, lo, hi);
        out.push_str("</svg>\n");
        out
    }
}

fn colorbar(out: &mut String, x: f64, top: f64, h: f64, lo: f64, hi: f64) {
    let steps = 32;
    let sh = h / steps as f64;
    for k in 0..steps {
        let t = (k as f64 + 0.5) / steps as f64;
        let y = top + h - (k + 1) as f64 * sh;
        let _ = writeln!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="16" height="{:.2}" fill="{}"/>"#, sh + 0.5, viridis(t));
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{hi:.3}</text>"#, x + 20.0, top + 8.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{lo:.3}</text>"#, x + 20.0, top + h);
}

/// Scatter of `(x, y)` points with a dashed horizontal line at `y = 0` and
/// optional dashed verticals at `marks`.
pub fn scatter(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], marks: &[f64], timestamp: Option<&str>) -> String {
    let mut out = String::new();
    header(&mut out, title, timestamp);
    let (left, right, top, bottom) = (70.0, 30.0, 40.0, 60.0);
    let (pw, ph) = (WIDTH - left - right, HEIGHT - top - bottom);
    let finite = points.iter().filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, 1.0f64, 0.0f64, 0.0f64);
    for &(x, y) in finite.clone() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;
    let _ = writeln!(out, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    if y0 < 0.0 && y1 > 0.0 {
        let _ = writeln!(
            out,
            r#"<line x1="{left}" x2="{:.2}" y1="{:.2}" y2="{:.2}" stroke="grey" stroke-dasharray="4 3"/>"#,
            left + pw,
            sy(0.0),
            sy(0.0)
        );
    }
    for &m in marks.iter().filter(|m| **m >= x0 && **m <= x1) {
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" x2="{:.2}" y1="{top}" y2="{:.2}" stroke="grey" stroke-dasharray="4 3"/>"#,
            sx(m),
            sx(m),
            top + ph
        );
    }
    for &(x, y) in finite {
        let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}"/>"#, sx(x), sy(y), viridis(0.3));
    }
    for (v, anchor, px, py) in [(x0, "start", left, top + ph + 16.0), (x1, "end", left + pw, top + ph + 16.0)] {
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{py:.2}" text-anchor="{anchor}">{v:.3}</text>"#);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y1:.3}</text>"#, left - 6.0, top + 8.0);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{y0:.3}</text>"#, left - 6.0, top + ph);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, left + pw / 2.0, HEIGHT - 18.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    out.push_str("</svg>\n");
    out
}
