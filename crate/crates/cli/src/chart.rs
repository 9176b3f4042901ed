//! Minimal static SVG charts.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 40.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Line<'a> {
    pub label: &'a str,
    pub values: &'a [f64],
}

pub struct Band<'a> {
    pub label: &'a str,
    pub lo: &'a [f64],
    pub hi: &'a [f64],
}

pub struct LineChart<'a> {
    pub title: &'a str,
    pub y_label: &'a str,
    pub x: Vec<f64>,
    pub bands: Vec<Band<'a>>,
    pub lines: Vec<Line<'a>>,
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn range<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{LEFT}" y="20" font-size="14">{}</text>"#,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, y_label: &str, x_ticks: bool) {
    let (x0, x1) = (f.px(f.x.0), f.px(f.x.1));
    let (y0, y1) = (f.py(f.y.0), f.py(f.y.1));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1},{y1:.1}V{y0:.1}H{x1:.1}" fill="none" stroke="black"/>"#
    );
    for k in 0..=4 {
        let v = f.y.0 + (f.y.1 - f.y.0) * f64::from(k) / 4.0;
        let y = f.py(v);
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            y + 4.0,
            tick(v)
        );
    }
    if x_ticks {
        for k in 0..=4 {
            let v = f.x.0 + (f.x.1 - f.x.0) * f64::from(k) / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                f.px(v),
                y0 + 16.0,
                tick(v)
            );
        }
    }
    if f.y.0 < 0.0 && f.y.1 > 0.0 {
        let _ = writeln!(
            out,
            r##"<path d="M{x0:.1},{:.1}H{x1:.1}" stroke="#888" stroke-dasharray="4 3"/>"##,
            f.py(0.0)
        );
    }
    let _ = writeln!(
        out,
        r#"<text transform="translate(14,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn legend(out: &mut String, k: usize, label: &str, colour: &str, opacity: f64) {
    let x = WIDTH - RIGHT + 16.0;
    let y = TOP + 18.0 * k as f64;
    let _ = writeln!(
        out,
        r#"<rect x="{x}" y="{:.1}" width="14" height="10" fill="{colour}" fill-opacity="{opacity}"/><text x="{}" y="{:.1}">{}</text>"#,
        y,
        x + 20.0,
        y + 9.0,
        escape(label)
    );
}

impl LineChart<'_> {
    pub fn to_svg(&self) -> String {
        let x = range(self.x.iter());
        let y = range(
            self.lines
                .iter()
                .flat_map(|l| l.values)
                .chain(self.bands.iter().flat_map(|b| b.lo.iter().chain(b.hi))),
        );
        let f = Frame::new(x, (y.0.min(0.0), y.1.max(0.0)));
        let mut out = String::new();
        open(&mut out, self.title);
        let mut k = 0;
        for (i, b) in self.bands.iter().enumerate() {
            let colour = COLOURS[i % COLOURS.len()];
            let mut d = String::new();
            for (j, (&x, &hi)) in self.x.iter().zip(b.hi).enumerate() {
                let _ = write!(d, "{}{:.1},{:.1}", if j == 0 { 'M' } else { 'L' }, f.px(x), f.py(hi));
            }
            for (&x, &lo) in self.x.iter().zip(b.lo).rev() {
                let _ = write!(d, "L{:.1},{:.1}", f.px(x), f.py(lo));
            }
            let _ = writeln!(
                out,
                r#"<path d="{d}Z" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#
            );
            legend(&mut out, k, b.label, colour, 0.2);
            k += 1;
        }
        for (i, l) in self.lines.iter().enumerate() {
            let colour = COLOURS[i % COLOURS.len()];
            let mut d = String::new();
            for (j, (&x, &v)) in self.x.iter().zip(l.values).enumerate() {
                let _ = write!(d, "{}{:.1},{:.1}", if j == 0 { 'M' } else { 'L' }, f.px(x), f.py(v));
            }
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="2"/>"#);
            legend(&mut out, k, l.label, colour, 1.0);
            k += 1;
        }
        axes(&mut out, &f, self.y_label, true);
        out.push_str("</svg>\n");
        out
    }
}

/// Grouped bars: one group per category, one bar per series.
pub fn bar_chart(title: &str, y_label: &str, categories: &[String], series: &[(&str, Vec<f64>)]) -> String {
    let y = range(series.iter().flat_map(|(_, v)| v));
    let f = Frame::new((0.0, categories.len() as f64), (y.0.min(0.0), y.1.max(0.0)));
    let mut out = String::new();
    open(&mut out, title);
    let slot = 0.8 / series.len().max(1) as f64;
    for (i, (label, values)) in series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        for (c, &v) in values.iter().enumerate() {
            let x0 = f.px(c as f64 + 0.1 + slot * i as f64);
            let x1 = f.px(c as f64 + 0.1 + slot * (i as f64 + 1.0));
            let (top, bottom) = (f.py(v.max(0.0)), f.py(v.min(0.0)));
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{colour}"/>"#,
                x1 - x0,
                bottom - top
            );
        }
        legend(&mut out, i, label, colour, 1.0);
    }
    for (c, name) in categories.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            f.px(c as f64 + 0.5),
            HEIGHT - BOTTOM + 16.0,
            escape(name)
        );
    }
    axes(&mut out, &f, y_label, false);
    out.push_str("</svg>\n");
    out
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
