//! Minimal standalone SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(title: &str) -> String {
    let mut s = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    s.push('\n');
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    s
}

fn axes(s: &mut String, xlabel: &str, ylabel: &str, x: (f64, f64), y: (f64, f64), log_x: bool) {
    let (x0, x1, y0, y1) = (MARGIN, W - MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    let fmt = |v: f64| format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string();
    let xt = |v: f64| if log_x { fmt(10f64.powf(v)) } else { fmt(v) };
    let _ = writeln!(s, r#"<text x="{x0}" y="{}" text-anchor="middle">{}</text>"#, y0 + 16.0, xt(x.0));
    let _ = writeln!(s, r#"<text x="{x1}" y="{}" text-anchor="middle">{}</text>"#, y0 + 16.0, xt(x.1));
    let _ = writeln!(s, r#"<text x="{}" y="{y0}" text-anchor="end">{}</text>"#, x0 - 4.0, fmt(y.0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 - 4.0, y1 + 4.0, fmt(y.1));
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Line chart; non-finite points are skipped. With `log_x`, x must be > 0.
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], log_x: bool) -> String {
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let xr = range(series.iter().flat_map(|s| s.points.iter().map(|p| tx(p.0))));
    let yr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let px = |x: f64| MARGIN + (tx(x) - xr.0) / (xr.1 - xr.0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * MARGIN);

    let mut s = header(title);
    axes(&mut s, xlabel, ylabel, xr, yr, log_x);
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| tx(p.0).is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - MARGIN + 4.0,
            MARGIN + 16.0 * k as f64,
            escape(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Bar chart of bin counts over [lo, hi].
pub fn histogram(title: &str, xlabel: &str, counts: &[u64], lo: f64, hi: f64) -> String {
    let max = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let mut s = header(title);
    axes(&mut s, xlabel, "count", (lo, hi), (0.0, max), false);
    let bw = (W - 2.0 * MARGIN) / counts.len().max(1) as f64;
    for (i, &c) in counts.iter().enumerate() {
        let h = c as f64 / max * (H - 2.0 * MARGIN);
        let _ = writeln!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#1f77b4"/>"##,
            MARGIN + i as f64 * bw,
            H - MARGIN - h,
            (bw - 1.0).max(0.5),
            h
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Grid of cells shaded by value; NaN cells are drawn grey.
pub fn heatmap(title: &str, xlabel: &str, ylabel: &str, xs: &[f64], ys: &[f64], value: impl Fn(usize, usize) -> f64) -> String {
    let vals: Vec<f64> = (0..xs.len()).flat_map(|i| (0..ys.len()).map(move |j| (i, j))).map(|(i, j)| value(i, j)).collect();
    let (lo, hi) = range(vals.iter().copied());
    let mut s = header(title);
    let cw = (W - 2.0 * MARGIN) / xs.len().max(1) as f64;
    let ch = (H - 2.0 * MARGIN) / ys.len().max(1) as f64;
    for (i, x) in xs.iter().enumerate() {
        for (j, _) in ys.iter().enumerate() {
            let v = vals[i * ys.len() + j];
            let fill = if v.is_finite() {
                let t = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
                let r = (255.0 * t) as u8;
                let b = (255.0 * (1.0 - t)) as u8;
                format!("rgb({r},64,{b})")
            } else {
                "#bbbbbb".to_string()
            };
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"><title>{x}, {}: {v}</title></rect>"#,
                MARGIN + i as f64 * cw,
                H - MARGIN - (j + 1) as f64 * ch,
                cw,
                ch,
                ys[j]
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">blue {lo:.3e} .. red {hi:.3e}</text>"#,
        W - MARGIN,
        MARGIN - 8.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_closed_documents() {
        let line = line_chart(
            "a<b",
            "x",
            "y",
            &[Series {
                name: "s",
                points: vec![(1.0, 2.0), (10.0, f64::NAN), (100.0, 3.0)],
            }],
            true,
        );
        assert!(line.starts_with("<svg") && line.ends_with("</svg>\n"));
        assert!(line.contains("a&lt;b") && line.contains("<polyline"));
        let hist = histogram("h", "o", &[0, 3, 1], -1.0, 1.0);
        assert_eq!(hist.matches("<rect").count(), 4);
        let heat = heatmap("m", "mu", "q", &[0.1, 0.5], &[0.1], |i, _| if i == 0 { f64::NAN } else { 1.0 });
        assert!(heat.contains("#bbbbbb"));
    }
}
