//! Minimal SVG line plots and heat tables.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, x: (f64, f64), y: (f64, f64), xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (PAD, W - PAD / 2.0, H - PAD, PAD);
    let _ = writeln!(out, "<path d=\"M{x0} {y1} L{x0} {y0} L{x1} {y0}\" stroke=\"black\" fill=\"none\"/>");
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let px = x0 + f * (x1 - x0);
        let py = y0 - f * (y0 - y1);
        let _ = writeln!(
            out,
            "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.3}</text>",
            y0 + 16.0,
            x.0 + f * (x.1 - x.0)
        );
        let _ =
            writeln!(out, "<text x=\"{:.1}\" y=\"{py:.1}\" text-anchor=\"end\">{:.3}</text>", x0 - 6.0, y.0 + f * (y.1 - y.0));
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        H - 18.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let xb = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yb = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, xb, yb, xlabel, ylabel);
    let sx = |x: f64| PAD + (x - xb.0) / (xb.1 - xb.0) * (W - 1.5 * PAD);
    let sy = |y: f64| H - PAD - (y - yb.0) / (yb.1 - yb.0) * (H - 2.0 * PAD);
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(out, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", pts.join(" "));
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>",
            W - 1.5 * PAD - 100.0,
            PAD + 14.0 * (k as f64 + 1.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Cells coloured by value on a white-to-red scale; `cells[r][c]`.
pub fn heat_table(title: &str, row_labels: &[String], col_labels: &[String], cells: &[Vec<f64>]) -> String {
    let (lo, hi) = bounds(cells.iter().flatten().copied());
    let rows = cells.len().max(1) as f64;
    let cols = cells.first().map_or(1, Vec::len).max(1) as f64;
    let cw = (W - 1.5 * PAD) / cols;
    let ch = (H - 2.0 * PAD) / rows;
    let mut out = String::new();
    header(&mut out, title);
    for (r, row) in cells.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let f = if v.is_finite() { (v - lo) / (hi - lo) } else { 0.0 };
            let g = (255.0 * (1.0 - f)).round() as u8;
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{cw:.2}\" height=\"{ch:.2}\" fill=\"rgb(255,{g},{g})\" stroke=\"#ccc\"><title>{v:.6e}</title></rect>",
                PAD + c as f64 * cw,
                PAD + r as f64 * ch
            );
        }
    }
    for (r, l) in row_labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            PAD - 4.0,
            PAD + (r as f64 + 0.6) * ch,
            escape(l)
        );
    }
    for (c, l) in col_labels.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            PAD + (c as f64 + 0.5) * cw,
            H - PAD + 16.0,
            escape(l)
        );
    }
    let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\">range [{lo:.3e}, {hi:.3e}]</text>", PAD, H - 18.0);
    out.push_str("</svg>\n");
    out
}
