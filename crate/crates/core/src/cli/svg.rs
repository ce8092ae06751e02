//! Minimal SVG line chart with a logarithmic x axis.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const COLORS: [&str; 6] = ["#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e"];

pub struct Series<'a> {
    pub name: &'a str,
    pub values: Vec<f64>,
}

/// One polyline per series over positive `x` values. Non-finite points
/// break the line.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, x: &[f64], series: &[Series<'_>]) -> String {
    let xs: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let (x_lo, x_hi) = padded_range(xs.iter().copied().filter(|v| v.is_finite()), 0.0);
    let (y_lo, y_hi) = padded_range(series.iter().flat_map(|s| s.values.iter().copied()).filter(|v| v.is_finite()), 0.05);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |v: f64| TOP + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + plot_w / 2.0, xml(title)).unwrap();
    writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    )
    .unwrap();

    let mut decade = x_lo.ceil() as i32;
    while f64::from(decade) <= x_hi + 1e-9 {
        let xp = px(f64::from(decade));
        writeln!(s, r#"<line x1="{xp:.1}" y1="{:.1}" x2="{xp:.1}" y2="{:.1}" stroke="black"/>"#, TOP + plot_h, TOP + plot_h + 5.0).unwrap();
        writeln!(s, r#"<text x="{xp:.1}" y="{:.1}" text-anchor="middle">1e{decade}</text>"#, TOP + plot_h + 18.0).unwrap();
        decade += 1;
    }
    for i in 0..=5 {
        let v = y_lo + (y_hi - y_lo) * f64::from(i) / 5.0;
        let yp = py(v);
        writeln!(s, r#"<line x1="{:.1}" y1="{yp:.1}" x2="{LEFT}" y2="{yp:.1}" stroke="black"/>"#, LEFT - 5.0).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 8.0, yp + 4.0, tick_label(v)).unwrap();
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, LEFT + plot_w / 2.0, HEIGHT - 10.0, xml(x_label)).unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        xml(y_label)
    )
    .unwrap();

    for (k, serie) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, s: &mut String| {
            if segment.len() > 1 {
                writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, segment.join(" ")).unwrap();
            }
            segment.clear();
        };
        for (xv, yv) in xs.iter().zip(&serie.values) {
            if xv.is_finite() && yv.is_finite() {
                segment.push(format!("{:.2},{:.2}", px(*xv), py(*yv)));
            } else {
                flush(&mut segment, &mut s);
            }
        }
        flush(&mut segment, &mut s);
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 25.0).unwrap();
        writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 32.0, ly + 4.0, xml(serie.name)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn padded_range(values: impl Iterator<Item = f64>, pad: f64) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let span = hi - lo;
    (lo - pad * span, hi + pad * span)
}

fn tick_label(v: f64) -> String {
    let t = format!("{v:.3}");
    if t == "-0.000" { "0.000".into() } else { t }
}

fn xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let x = [1e6, 1e7, 1e8];
        let svg = line_chart(
            "t",
            "N",
            "rate",
            &x,
            &[
                Series { name: "a", values: vec![0.1, 0.2, 0.3] },
                Series { name: "b<c", values: vec![0.0, 0.1, 0.15] },
            ],
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("1e7"));
        assert!(svg.contains("b&lt;c"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn gaps_split_lines() {
        let svg = line_chart("t", "x", "y", &[1.0, 10.0, 100.0, 1000.0, 1e4], &[Series {
            name: "s",
            values: vec![1.0, 2.0, f64::NAN, 3.0, 4.0],
        }]);
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
