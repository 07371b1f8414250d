//! Minimal static SVG emission for batch reports: a line plot and a
//! histogram are all the lab needs.

use std::fmt::Write as _;

const W: f64 = 720.0;
const H: f64 = 420.0;
const MARGIN: f64 = 54.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"##
    );
    let _ = write!(
        s,
        r##"<rect width="{W}" height="{H}" fill="white"/><text x="{}" y="22" font-family="monospace" font-size="15" text-anchor="middle">{}</text>"##,
        W / 2.0,
        title
    );
    s
}

fn axis_box(s: &mut String) {
    let _ = write!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#444" stroke-width="1"/>"##,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
}

fn map_x(x: f64, lo: f64, hi: f64) -> f64 {
    MARGIN + (x - lo) / (hi - lo).max(1e-300) * (W - 2.0 * MARGIN)
}

fn map_y(y: f64, lo: f64, hi: f64) -> f64 {
    H - MARGIN - (y - lo) / (hi - lo).max(1e-300) * (H - 2.0 * MARGIN)
}

/// Plot one or more series against a shared x axis, with optional vertical
/// marker lines (e.g. the anchor position of a comparison function).
pub fn line_plot(
    title: &str,
    x_label: &str,
    series: &[(&str, &str, &[f64], &[f64])],
    markers: &[(f64, &str)],
) -> String {
    let mut s = header(title);
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, _, xs, ys) in series {
        for &x in *xs {
            x_lo = x_lo.min(x);
            x_hi = x_hi.max(x);
        }
        for &y in *ys {
            y_lo = y_lo.min(y);
            y_hi = y_hi.max(y);
        }
    }
    if !x_lo.is_finite() {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    if !y_lo.is_finite() {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    let pad = (y_hi - y_lo).max(1e-12) * 0.08;
    y_lo -= pad;
    y_hi += pad;
    axis_box(&mut s);
    for &(x, color) in markers {
        let px = map_x(x, x_lo, x_hi);
        let _ = write!(
            s,
            r##"<line x1="{px}" y1="{MARGIN}" x2="{px}" y2="{}" stroke="{color}" stroke-width="1.5" stroke-dasharray="5,4"/>"##,
            H - MARGIN
        );
    }
    for (idx, (name, color, xs, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = xs
            .iter()
            .zip(*ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", map_x(x, x_lo, x_hi), map_y(y, y_lo, y_hi)))
            .collect();
        let _ = write!(
            s,
            r##"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"##,
            pts.join(" ")
        );
        let _ = write!(
            s,
            r##"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="{color}">{name}</text>"##,
            W - MARGIN - 150.0,
            MARGIN + 16.0 + 15.0 * idx as f64
        );
    }
    let _ = write!(
        s,
        r##"<text x="{}" y="{}" font-family="monospace" font-size="12" text-anchor="middle">{x_label}</text>"##,
        W / 2.0,
        H - 16.0
    );
    for (v, label_y) in [(y_lo + pad, H - MARGIN), (y_hi - pad, MARGIN + 4.0)] {
        let _ = write!(
            s,
            r##"<text x="{}" y="{label_y}" font-family="monospace" font-size="11" text-anchor="end">{v:.3}</text>"##,
            MARGIN - 6.0
        );
    }
    for (v, anchor) in [(x_lo, "start"), (x_hi, "end")] {
        let _ = write!(
            s,
            r##"<text x="{}" y="{}" font-family="monospace" font-size="11" text-anchor="{anchor}">{v:.3}</text>"##,
            map_x(v, x_lo, x_hi),
            H - MARGIN + 16.0
        );
    }
    s.push_str("</svg>");
    s
}

/// Histogram with an optional highlighted acceptance band.
pub fn histogram(title: &str, x_label: &str, values: &[f64], bins: usize, band: Option<(f64, f64)>) -> String {
    let mut s = header(title);
    if values.is_empty() {
        s.push_str("</svg>");
        return s;
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if (hi - lo).abs() < 1e-12 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
    // widen to include the acceptance band when present
    let (lo, hi) = match band {
        Some((a, b)) => (lo.min(a), hi.max(b)),
        None => (lo, hi),
    };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / (hi - lo)) * bins as f64).floor() as isize;
        let k = k.clamp(0, bins as isize - 1) as usize;
        counts[k] += 1;
    }
    let max_count = counts.iter().copied().max().unwrap_or(1).max(1);
    if let Some((a, b)) = band {
        let xa = map_x(a, lo, hi);
        let xb = map_x(b, lo, hi);
        let _ = write!(
            s,
            r##"<rect x="{xa}" y="{MARGIN}" width="{}" height="{}" fill="#d8f0d8"/>"##,
            xb - xa,
            H - 2.0 * MARGIN
        );
    }
    axis_box(&mut s);
    let bar_w = (W - 2.0 * MARGIN) / bins as f64;
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let bh = c as f64 / max_count as f64 * (H - 2.0 * MARGIN);
        let _ = write!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4878b0" stroke="white" stroke-width="0.5"/>"##,
            MARGIN + k as f64 * bar_w,
            H - MARGIN - bh,
            bar_w,
            bh
        );
    }
    let _ = write!(
        s,
        r##"<text x="{}" y="{}" font-family="monospace" font-size="12" text-anchor="middle">{x_label}</text>"##,
        W / 2.0,
        H - 16.0
    );
    for (v, anchor) in [(lo, "start"), (hi, "end")] {
        let _ = write!(
            s,
            r##"<text x="{}" y="{}" font-family="monospace" font-size="11" text-anchor="{anchor}">{v:.3}</text>"##,
            map_x(v, lo, hi),
            H - MARGIN + 16.0
        );
    }
    s.push_str("</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plots_are_well_formed() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [0.5, 0.2, 0.9];
        let svg = line_plot("t", "arc", &[("phi", "#4878b0", &xs, &ys)], &[(1.0, "#b04848")]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>"));
        assert!(svg.contains("polyline"));
        let hist = histogram("h", "lambda", &[1.0, 1.01, 0.99], 10, Some((0.98, 1.02)));
        assert!(hist.contains("rect"));
        assert!(hist.ends_with("</svg>"));
    }
}
