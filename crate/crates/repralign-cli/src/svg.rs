//! Minimal self-contained SVG emission: line charts and scatter plots.
//! Figures are conveniences; the CSV artifacts are the ground truth.

use std::io;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
    log_x: bool,
}

impl Frame {
    fn from_points<'a>(points: impl Iterator<Item = &'a (f64, f64)>, log_x: bool) -> Frame {
        let mut x_min = f64::INFINITY;
        let mut x_max = f64::NEG_INFINITY;
        let mut y_min = f64::INFINITY;
        let mut y_max = f64::NEG_INFINITY;
        for &(x, y) in points {
            if !y.is_finite() {
                continue;
            }
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
        if !x_min.is_finite() {
            (x_min, x_max, y_min, y_max) = (0.0, 1.0, 0.0, 1.0);
        }
        if x_min == x_max {
            x_max = x_min + 1.0;
        }
        if y_min == y_max {
            y_max = y_min + 1.0;
        }
        Frame {
            x_min,
            x_max,
            y_min,
            y_max,
            log_x,
        }
    }

    fn tx(&self, x: f64) -> f64 {
        let (a, b, v) = if self.log_x {
            (self.x_min.ln(), self.x_max.ln(), x.ln())
        } else {
            (self.x_min, self.x_max, x)
        };
        MARGIN_LEFT + (v - a) / (b - a) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn ty(&self, y: f64) -> f64 {
        HEIGHT - MARGIN_BOTTOM
            - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn open_svg(title: &str, x_label: &str, y_label: &str, frame: &Frame) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"15\">{}</text>\n",
        WIDTH / 2.0,
        escape(title),
    );
    // axes
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    s.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    // extreme tick labels
    s.push_str(&format!(
        "<text x=\"{x0}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"11\">{}</text>\n\
         <text x=\"{x1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"11\">{}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
         font-size=\"11\">{}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" \
         font-size=\"11\">{}</text>\n",
        y0 + 16.0,
        trim_num(frame.x_min),
        y0 + 16.0,
        trim_num(frame.x_max),
        x0 - 6.0,
        y0 + 4.0,
        trim_num(frame.y_min),
        x0 - 6.0,
        y1 + 4.0,
        trim_num(frame.y_max),
    ));
    // axis labels
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\">{}</text>\n\
         <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
         font-size=\"13\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label),
    ));
    s
}

fn trim_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e9 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One polyline per named series; non-finite values break the line.
pub fn line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
    log_x: bool,
) -> io::Result<()> {
    let frame = Frame::from_points(series.iter().flat_map(|(_, pts)| pts.iter()), log_x);
    let mut s = open_svg(title, x_label, y_label, &frame);
    for (si, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut coords = String::new();
        for &(x, y) in pts {
            if !y.is_finite() {
                continue;
            }
            coords.push_str(&format!("{:.2},{:.2} ", frame.tx(x), frame.ty(y)));
        }
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            coords.trim_end()
        ));
        // legend entry
        let ly = MARGIN_TOP + 16.0 * si as f64;
        s.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            WIDTH - MARGIN_RIGHT - 120.0,
            WIDTH - MARGIN_RIGHT - 100.0,
            WIDTH - MARGIN_RIGHT - 94.0,
            ly + 4.0,
            escape(name),
        ));
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)
}

/// Scatter with optional per-point labels.
pub fn scatter(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64, String)],
) -> io::Result<()> {
    let plain: Vec<(f64, f64)> = points.iter().map(|p| (p.0, p.1)).collect();
    let frame = Frame::from_points(plain.iter(), false);
    let mut s = open_svg(title, x_label, y_label, &frame);
    for (x, y, tag) in points {
        if !y.is_finite() {
            continue;
        }
        let (px, py) = (frame.tx(*x), frame.ty(*y));
        s.push_str(&format!(
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{}\"/>\n",
            PALETTE[0]
        ));
        if !tag.is_empty() {
            s.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" \
                 font-size=\"9\" fill=\"#555555\">{}</text>\n",
                px + 4.0,
                py - 4.0,
                escape(tag),
            ));
        }
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)
}
